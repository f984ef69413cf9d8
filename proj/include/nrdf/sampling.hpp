#pragma once

#include <string>

#include "nrdf/pose.hpp"
#include "nrdf/rng.hpp"

namespace nrdf {

/// Family of scalar distributions that controls how far a perturbed sample
/// lands from its seed pose.
enum class DistKind { kHalfGauss, kExponential, kUniform, kDirac, kPoseNdf };

/// Distance distribution with its parameters. Meaning of a/b by kind:
/// half-Gaussian sigma, exponential rate, uniform bounds [a, b], Dirac value,
/// Pose-NDF-style ambient noise sigma.
struct DistanceSpec {
  DistKind kind = DistKind::kHalfGauss;
  double a = 0.7853981633974483;
  double b = 0.0;
};

/// Parses "halfgauss:0.5", "exp:8", "uniform:0.1,0.4", "dirac:0.3",
/// "posendf:0.1". Throws MalformedFile on anything else.
DistanceSpec parse_distance_spec(const std::string& text);
std::string format_distance_spec(const DistanceSpec& spec);

struct SamplerConfig {
  DistanceSpec dist;
  double max_per_joint_step = kPi / 2 - 1e-3;
  int max_redraws = 100;
};

/// One draw from the scalar distance distribution (kPoseNdf has no scalar
/// distance and is rejected here).
double sample_distance(const DistanceSpec& spec, Rng& rng);

/// Direction uniform on the unit sphere of the 3K-dimensional tangent space.
PoseTangent sample_unit_tangent(std::size_t k, Rng& rng);

/// Distance-controlled perturbation: draws h from the spec and a uniform unit
/// tangent direction, then walks the geodesic Exp_pose(h * v). Pairs whose
/// largest per-joint arc would exceed max_per_joint_step are redrawn whole;
/// GuardExhausted after max_redraws attempts. Within the per-joint bound the
/// realized p=2 distance to the seed equals h exactly. The spec must be a
/// scalar-distance kind; realized_h, when non-null, receives the accepted h.
Pose perturb_pose(const Pose& pose, const SamplerConfig& cfg, Rng& rng,
                  double* realized_h = nullptr);

/// Ambient-noise baseline: per joint, (q + eps) / ||q + eps|| with
/// eps ~ N(0, sigma^2 I_4), then sign canonicalization. sigma = 0 returns the
/// input unchanged.
Pose posendf_perturb(const Pose& pose, double sigma, Rng& rng);

/// Pose with every joint drawn N(0, I_4), normalized, sign-canonical.
Pose ambient_gaussian_pose(std::size_t k, Rng& rng);

/// Interpolant training sample: noise pose drawn ambient-Gaussian, t ~ U(0,1),
/// pose_t on the geodesic from noise toward clean, target = (1 - t) * d(noise,
/// clean) under the given metric. No nearest-neighbor search involved.
struct FmPair {
  Pose pose_t;
  double target = 0.0;
  double t = 0.0;
};
FmPair sample_fm_pair(const Pose& clean, Metric metric, Rng& rng);

}  // namespace nrdf
