#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nrdf/dataset.hpp"
#include "nrdf/projection.hpp"

namespace nrdf {

// rigid chain/tree; offsets are rest-pose bone vectors in the parent frame,
// the root sits at the origin
struct Skeleton {
  std::vector<std::int64_t> parents;
  std::vector<std::array<double, 3>> offsets;

  std::size_t joints() const { return parents.size(); }
  void validate() const;
};

Skeleton make_chain(std::size_t k, double bone_length);

std::array<double, 3> rotate_vec(const Quat& q, const std::array<double, 3>& v);

// world-frame joint rotations, child = parent_global * local
std::vector<Quat> global_rotations(const Skeleton& skel, const Pose& pose);
// world-frame joint positions
std::vector<std::array<double, 3>> forward_kinematics(const Skeleton& skel, const Pose& pose);

struct SummaryStats {
  double mean = 0.0, median = 0.0, min = 0.0, max = 0.0;
};
SummaryStats summarize(std::vector<double> values);

// exact NN distance of each pose to the reference set
std::vector<double> dnn_values(const PoseDataset& ref, const std::vector<Pose>& poses, Metric m,
                               int threads = 0);

// mean pairwise mean-per-joint FK distance, centimeters
double metric_apd_cm(const Skeleton& skel, const std::vector<Pose>& poses);

// mean per-joint FK distance between two poses, centimeters
double metric_m2m_cm(const Skeleton& skel, const Pose& a, const Pose& b);

// m2m plus lambda_q times the mean global-frame per-joint geodesic distance
double metric_dq_m2m(const Skeleton& skel, const Pose& a, const Pose& b, double lambda_q = 0.5);

// Frechet distance between the Gaussian fits of two point clouds (rows are
// points); covariance square roots via symmetric eigendecomposition
double frechet_gaussian(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b);

// frechet_gaussian on sign-canonical flattened 4K pose vectors
double metric_fid(const std::vector<Pose>& a, const std::vector<Pose>& b);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<double> edges;        // n_bins + 1
  std::vector<std::size_t> counts;  // n_bins
};

// bins the exact NN distances of poses against ref over [0, max]
Histogram hist_realized_distances(const PoseDataset& ref, const std::vector<Pose>& poses, Metric m,
                                  std::size_t n_bins, int threads = 0);
void save_histogram_csv(const std::string& path, const Histogram& hist);

// aggregate report; fields without a defined value stay NaN
struct MetricReport {
  SummaryStats d_nn;
  double apd_cm = 0.0;
  double fid = 0.0;
  double m2m_cm = 0.0;
  double dq_m2m = 0.0;
  bool has_pairwise = false;
};

MetricReport evaluate_set(const Skeleton& skel, const PoseDataset& ref,
                          const std::vector<Pose>& poses, Metric m,
                          const std::vector<Pose>* paired_gt = nullptr, double lambda_q = 0.5,
                          int threads = 0);

// FK fitting objective: sum over observed joints of the Euclidean position
// error; ambient gradient via central differences over the 3K tangent axes
// mapped through the left-translated basis
class FkDataField : public ScalarField {
 public:
  FkDataField(Skeleton skel, std::vector<std::size_t> observed,
              std::vector<std::array<double, 3>> targets, double fd_step = 1e-5);
  std::size_t joints() const override { return skel_.joints(); }
  FieldEval eval(const Pose& pose) const override;
  double observed_mean_error(const Pose& pose) const;

 private:
  Skeleton skel_;
  std::vector<std::size_t> observed_;
  std::vector<std::array<double, 3>> targets_;
  double fd_step_;
};

struct IkProblem {
  Skeleton skeleton;
  std::vector<std::size_t> observed;
  std::vector<std::array<double, 3>> targets;
  const ScalarField* prior = nullptr;
  double lambda_pose = 5.0;
};

struct IkConfig {
  double step = 5e-3;
  std::size_t max_iters = 1000;
  std::size_t warmup_max_iters = 50;
  double warmup_alpha = 1.0;
  double warmup_tol = 1e-5;
  double mpjpe_tol = 0.03;  // meters, mean over observed joints
};

struct IkResult {
  Pose pose;
  std::size_t iterations = 0;
  bool reached_tol = false;
  double observed_error = 0.0;
  double prior_initial = 0.0;
  double prior_final = 0.0;
};

// Two-phase solve: warm-up projects onto the prior's level set with the
// data term excluded, then fixed-step descent on data + lambda_pose * prior
// until the observed mean joint error drops under mpjpe_tol.
IkResult ik_solve(const IkProblem& problem, const Pose& init, const IkConfig& cfg);

struct GenerateConfig {
  std::size_t n = 100;
  SamplerConfig sampler;
  bool ambient_seeds = false;
  ProjectionConfig projection;
  int threads = 0;
};

struct GeneratedSet {
  std::vector<Pose> poses;
  std::vector<double> f_initial, f_final;
  std::vector<std::size_t> iterations;
  std::vector<std::uint8_t> converged;
};

// draws seeds (perturbed dataset poses or ambient Gaussians), projects each
// onto the field's zero set; sample i uses rng.split(i)
GeneratedSet generate_diverse(const ScalarField& field, const PoseDataset& ds,
                              const GenerateConfig& cfg, const Rng& rng);

}  // namespace nrdf
