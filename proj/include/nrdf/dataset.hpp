#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nrdf/pose.hpp"
#include "nrdf/rng.hpp"
#include "nrdf/sampling.hpp"

namespace nrdf {

struct PoseDataset {
  std::size_t k = 0;
  std::vector<Pose> poses;

  std::size_t size() const { return poses.size(); }
};

// perturbed query with its exact nearest neighbor in the source dataset
struct TrainingPair {
  Pose query;
  std::int64_t nn_index = -1;
  double distance = 0.0;
};

// Smooth low-dimensional pose family for desk-scale experiments. Each joint
// rotates about a fixed random axis by an angle that is a seeded mix of up to
// three low-frequency sinusoids of the latent code, bounded by amplitude.
struct SyntheticManifoldConfig {
  std::size_t k = 5;
  std::size_t latent_dim = 2;
  std::size_t n_poses = 1000;
  std::uint64_t seed = 1;
  double amplitude = 0.8;
};

class SyntheticManifold {
 public:
  explicit SyntheticManifold(const SyntheticManifoldConfig& cfg);

  // deterministic in (cfg, z); equal latent codes give identical poses
  Pose at(const std::vector<double>& z) const;

  std::size_t latent_dim() const { return cfg_.latent_dim; }
  std::size_t joints() const { return cfg_.k; }

  // n latent codes uniform in [0,1]^latent_dim, mapped through at()
  PoseDataset sample(std::size_t n, Rng& rng) const;

 private:
  struct Sinusoid {
    std::vector<double> dir;
    double omega = 0.0;
    double amp = 0.0;
    double phase = 0.0;
  };
  struct JointLaw {
    double axis[3] = {1.0, 0.0, 0.0};
    std::vector<Sinusoid> terms;
    double amp_scale = 1.0;
  };

  SyntheticManifoldConfig cfg_;
  std::vector<JointLaw> joints_;
};

PoseDataset gen_synthetic_manifold(const SyntheticManifoldConfig& cfg);

// line-oriented pose file, header "NRDF-POSES v1 K=<K> N=<N>"
void save_poses(const std::string& path, const PoseDataset& ds);
PoseDataset load_poses(const std::string& path);

// training-pair file, header "NRDF-PAIRS v1 K=<K>"
void save_pairs(const std::string& path, std::size_t k, const std::vector<TrainingPair>& pairs);
std::vector<TrainingPair> load_pairs(const std::string& path, std::size_t* k_out);

// exact nearest neighbor, full scan; ties resolved to the lowest index
std::pair<std::int64_t, double> nn_exact(const PoseDataset& ds, const Pose& query, Metric m);

// ambient-Euclidean prefilter to kprime candidates, exact re-rank to kfinal;
// with kprime >= dataset size this reproduces nn_exact bit for bit
std::vector<std::pair<std::int64_t, double>> nn_two_stage(const PoseDataset& ds, const Pose& query,
                                                          Metric m, std::size_t kprime,
                                                          std::size_t kfinal);

// n_pairs perturbed poses labeled with their exact NN distance; pair i is
// generated from rng.split(i), so the output is independent of thread count
std::vector<TrainingPair> build_training_set(const PoseDataset& ds, std::size_t n_pairs,
                                             const SamplerConfig& sampler, Metric m,
                                             const Rng& rng, int threads = 0);

}  // namespace nrdf
