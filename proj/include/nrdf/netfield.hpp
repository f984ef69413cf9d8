#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nrdf/dataset.hpp"
#include "nrdf/pose.hpp"
#include "nrdf/rng.hpp"

namespace nrdf {

// row-major dense matrix
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  void resize(std::size_t r, std::size_t c) {
    rows = r;
    cols = c;
    a.assign(r * c, 0.0);
  }
  double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

// Network shape. Hierarchical mode runs one linear+leaky-ReLU block per joint
// whose input is that joint's quaternion concatenated with the parent joint's
// feature (zeros at the root), then a fully connected decoder over all joint
// features. Flat mode feeds the 4K coordinates straight into the decoder.
// The output head is softplus, so predicted distances are nonnegative and
// a zeroed final layer gives softplus(0) = ln 2 everywhere.
struct ModelArchitecture {
  std::size_t k = 0;
  bool hierarchical = true;
  std::size_t feature_dim = 16;
  std::vector<std::int64_t> parents;  // per joint, -1 for roots, parent index < joint index
  std::vector<std::size_t> decoder_hidden = {256, 256, 256};
  double leaky_slope = 0.01;

  std::size_t decoder_input() const { return hierarchical ? k * feature_dim : 4 * k; }
  void validate() const;  // throws ArchitectureMismatch
};

// chain skeleton parents 0 <- 1 <- ... <- k-1
std::vector<std::int64_t> chain_parents(std::size_t k);

struct DistanceFieldModel {
  ModelArchitecture arch;
  std::vector<Mat> enc_w;
  std::vector<std::vector<double>> enc_b;
  std::vector<Mat> dec_w;
  std::vector<std::vector<double>> dec_b;

  std::size_t param_count() const;
};

// fan-in-scaled uniform weights, zero biases
DistanceFieldModel model_init(const ModelArchitecture& arch, std::uint64_t seed);

// scratch buffers reused across forward/backward calls
struct ModelWorkspace {
  std::vector<double> input;
  std::vector<std::vector<double>> enc_in, enc_pre, feat;
  std::vector<std::vector<double>> dec_pre, dec_act;
  std::vector<std::vector<double>> dec_delta;
  std::vector<std::vector<double>> feat_grad, enc_pre_grad;
  double z = 0.0, f = 0.0;
};

// Predicted distance for one pose. Joints are sign-canonicalized on entry, so
// the value depends only on the rotations. forward() is the allocation-free
// path when a workspace is supplied.
double forward(const DistanceFieldModel& model, const Pose& pose, ModelWorkspace& ws);
double forward(const DistanceFieldModel& model, const Pose& pose);

// same shapes as the model's parameters
struct ModelGrads {
  std::vector<Mat> enc_w;
  std::vector<std::vector<double>> enc_b;
  std::vector<Mat> dec_w;
  std::vector<std::vector<double>> dec_b;

  void init_like(const DistanceFieldModel& model);
  void zero();
};

// Accumulates d(loss)/d(params) into grads given d(loss)/d(f); the workspace
// must hold the forward pass of the same pose.
void backward_params(const DistanceFieldModel& model, ModelWorkspace& ws, double dloss_df,
                     ModelGrads& grads);

// d f / d (ambient 4K coordinates) at the canonical representative of the
// pose held in the workspace
std::vector<double> backward_input(const DistanceFieldModel& model, ModelWorkspace& ws);

// convenience wrapper: forward plus backward_input
std::vector<double> input_gradient(const DistanceFieldModel& model, const Pose& pose,
                                   double* value_out = nullptr);

enum class LossKind { kMae, kMse };
enum class TrainMode { kNrdf, kFmDis };

struct TrainConfig {
  double lr = 1e-4;
  std::size_t epochs = 20;
  std::size_t batch = 128;
  double stage2_frac = 0.25;
  LossKind loss = LossKind::kMae;
  TrainMode mode = TrainMode::kNrdf;
  Metric metric = Metric::kL1;
  std::size_t fm_samples_per_epoch = 20000;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::uint64_t seed = 1;
  int threads = 0;
  bool verbose = false;
};

struct LossRow {
  std::size_t epoch = 0;
  int stage = 1;
  double mean_loss = 0.0;
};

struct TrainResult {
  std::vector<LossRow> curve;
};

// Mean batch loss and parameter gradients for a batch of (pose, target)
// samples. MAE uses the zero subgradient at f == target.
struct BatchSample {
  const Pose* pose = nullptr;
  double target = 0.0;
};
double batch_loss_and_grad(const DistanceFieldModel& model, const std::vector<BatchSample>& batch,
                           LossKind loss, ModelWorkspace& ws, ModelGrads& grads);

// Adam training. kNrdf runs two stages: first batches of 50% perturbed pairs
// and 50% clean dataset poses with target 0, then a fine-tune on
// ambient-Gaussian poses labeled with their exact NN distance. kFmDis draws
// interpolant pairs on the fly each batch and runs a single stage. Throws
// DivergedTraining on a non-finite loss. Deterministic for a fixed seed.
TrainResult train(DistanceFieldModel& model, const PoseDataset& clean,
                  const std::vector<TrainingPair>& pairs, const TrainConfig& cfg);

// versioned text checkpoint; save -> load -> save is byte-identical
void save_model(const std::string& path, const DistanceFieldModel& model);
DistanceFieldModel load_model(const std::string& path);

void save_loss_curve(const std::string& path, const TrainResult& result);

}  // namespace nrdf
