#include "nrdf/sampling.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "nrdf/errors.hpp"

namespace nrdf {

DistanceSpec parse_distance_spec(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw MalformedFile("distance spec missing ':': " + text);
  const std::string name = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);
  auto parse1 = [&](double& out) {
    char* end = nullptr;
    out = std::strtod(args.c_str(), &end);
    if (end == args.c_str() || *end != '\0')
      throw MalformedFile("bad distance spec parameter: " + text);
  };
  DistanceSpec spec;
  if (name == "halfgauss") {
    spec.kind = DistKind::kHalfGauss;
    parse1(spec.a);
    if (spec.a <= 0) throw MalformedFile("halfgauss sigma must be positive");
  } else if (name == "exp") {
    spec.kind = DistKind::kExponential;
    parse1(spec.a);
    if (spec.a <= 0) throw MalformedFile("exponential rate must be positive");
  } else if (name == "uniform") {
    spec.kind = DistKind::kUniform;
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw MalformedFile("uniform needs lo,hi: " + text);
    char* end = nullptr;
    spec.a = std::strtod(args.substr(0, comma).c_str(), &end);
    spec.b = std::strtod(args.substr(comma + 1).c_str(), &end);
    if (spec.a < 0 || spec.b < spec.a) throw MalformedFile("uniform needs 0 <= lo <= hi");
  } else if (name == "dirac") {
    spec.kind = DistKind::kDirac;
    parse1(spec.a);
    if (spec.a < 0) throw MalformedFile("dirac distance must be nonnegative");
  } else if (name == "posendf") {
    spec.kind = DistKind::kPoseNdf;
    parse1(spec.a);
    if (spec.a < 0) throw MalformedFile("posendf sigma must be nonnegative");
  } else {
    throw MalformedFile("unknown distance spec kind: " + name);
  }
  return spec;
}

std::string format_distance_spec(const DistanceSpec& spec) {
  char buf[96];
  switch (spec.kind) {
    case DistKind::kHalfGauss:
      std::snprintf(buf, sizeof buf, "halfgauss:%.17g", spec.a);
      break;
    case DistKind::kExponential:
      std::snprintf(buf, sizeof buf, "exp:%.17g", spec.a);
      break;
    case DistKind::kUniform:
      std::snprintf(buf, sizeof buf, "uniform:%.17g,%.17g", spec.a, spec.b);
      break;
    case DistKind::kDirac:
      std::snprintf(buf, sizeof buf, "dirac:%.17g", spec.a);
      break;
    case DistKind::kPoseNdf:
      std::snprintf(buf, sizeof buf, "posendf:%.17g", spec.a);
      break;
  }
  return buf;
}

double sample_distance(const DistanceSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case DistKind::kHalfGauss:
      return std::abs(spec.a * rng.normal());
    case DistKind::kExponential: {
      const double u = 1.0 - rng.uniform01();
      return -std::log(u) / spec.a;
    }
    case DistKind::kUniform:
      return rng.uniform(spec.a, spec.b);
    case DistKind::kDirac:
      return spec.a;
    case DistKind::kPoseNdf:
      break;
  }
  throw MalformedFile("sample_distance: spec has no scalar distance");
}

PoseTangent sample_unit_tangent(std::size_t k, Rng& rng) {
  PoseTangent t(k);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& tj : t) {
      tj = Tangent{0.0, rng.normal(), rng.normal(), rng.normal()};
      norm2 += tj.x * tj.x + tj.y * tj.y + tj.z * tj.z;
    }
  } while (norm2 < 1e-24);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& tj : t) tj = tangent_scale(tj, inv);
  return t;
}

Pose perturb_pose(const Pose& pose, const SamplerConfig& cfg, Rng& rng, double* realized_h) {
  if (pose.empty()) throw EmptyDataset("perturb_pose: empty pose");
  for (int attempt = 0; attempt < cfg.max_redraws; ++attempt) {
    const double h = sample_distance(cfg.dist, rng);
    const PoseTangent v = sample_unit_tangent(pose.size(), rng);
    if (h * tangent_max_joint_norm(v) > cfg.max_per_joint_step) continue;
    if (realized_h) *realized_h = h;
    return pose_canonical(pose_exp(pose, tangent_scaled(v, h)));
  }
  throw GuardExhausted("perturb_pose: no admissible (h, v) after max_redraws attempts");
}

Pose posendf_perturb(const Pose& pose, double sigma, Rng& rng) {
  if (sigma < 0) throw MalformedFile("posendf_perturb: negative sigma");
  Pose out(pose.size());
  for (std::size_t j = 0; j < pose.size(); ++j) {
    Quat q = pose[j];
    if (sigma > 0) {
      q.w += sigma * rng.normal();
      q.x += sigma * rng.normal();
      q.y += sigma * rng.normal();
      q.z += sigma * rng.normal();
      q = quat_normalized(q);
    }
    out[j] = quat_canonical(q);
  }
  return out;
}

Pose ambient_gaussian_pose(std::size_t k, Rng& rng) {
  Pose p(k);
  for (auto& q : p) {
    q = Quat{rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    q = quat_canonical(quat_normalized(q));
  }
  return p;
}

FmPair sample_fm_pair(const Pose& clean, Metric metric, Rng& rng) {
  FmPair out;
  const Pose noise = ambient_gaussian_pose(clean.size(), rng);
  out.t = rng.uniform01();
  out.pose_t = pose_canonical(pose_interp(noise, clean, out.t));
  out.target = (1.0 - out.t) * pose_dist(noise, clean, metric);
  return out;
}

}  // namespace nrdf
