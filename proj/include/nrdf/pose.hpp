#pragma once

#include <cstddef>
#include <vector>

#include "nrdf/quat.hpp"

namespace nrdf {

// articulated pose: one unit quaternion per joint
using Pose = std::vector<Quat>;
// one identity-algebra tangent per joint
using PoseTangent = std::vector<Tangent>;

// product metric exponent
enum class Metric { kL1, kL2 };

inline void require_same_joints(std::size_t a, std::size_t b, const char* where) {
  if (a != b) throw DimensionMismatch(std::string(where) + ": joint counts differ");
}

inline Pose pose_identity(std::size_t k) { return Pose(k, quat_identity()); }

inline Pose pose_canonical(Pose p) {
  for (auto& q : p) q = quat_canonical(q);
  return p;
}

inline double pose_dist(const Pose& a, const Pose& b, Metric m) {
  require_same_joints(a.size(), b.size(), "pose_dist");
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = geodesic_dist(a[j], b[j]);
    acc += (m == Metric::kL1) ? d : d * d;
  }
  return (m == Metric::kL1) ? acc : std::sqrt(acc);
}

inline PoseTangent pose_log(const Pose& a, const Pose& b) {
  require_same_joints(a.size(), b.size(), "pose_log");
  PoseTangent t(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) t[j] = log_map(a[j], b[j]);
  return t;
}

inline Pose pose_exp(const Pose& p, const PoseTangent& t) {
  require_same_joints(p.size(), t.size(), "pose_exp");
  Pose out(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) out[j] = exp_map(p[j], t[j]);
  return out;
}

inline Pose pose_interp(const Pose& a, const Pose& b, double t) {
  require_same_joints(a.size(), b.size(), "pose_interp");
  Pose out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = geodesic_interp(a[j], b[j], t);
  return out;
}

inline PoseTangent tangent_zero(std::size_t k) { return PoseTangent(k); }

inline PoseTangent tangent_scaled(const PoseTangent& t, double s) {
  PoseTangent out(t.size());
  for (std::size_t j = 0; j < t.size(); ++j) out[j] = tangent_scale(t[j], s);
  return out;
}

// 2-norm over all 3K free coordinates
inline double tangent_global_norm(const PoseTangent& t) {
  double acc = 0.0;
  for (const auto& tj : t) acc += tj.x * tj.x + tj.y * tj.y + tj.z * tj.z;
  return std::sqrt(acc);
}

inline double tangent_max_joint_norm(const PoseTangent& t) {
  double m = 0.0;
  for (const auto& tj : t) m = std::max(m, tangent_norm(tj));
  return m;
}

// ambient coordinates, 4 per joint in (w, x, y, z) order
inline std::vector<double> pose_flatten(const Pose& p) {
  std::vector<double> out;
  out.reserve(4 * p.size());
  for (const auto& q : p) {
    out.push_back(q.w);
    out.push_back(q.x);
    out.push_back(q.y);
    out.push_back(q.z);
  }
  return out;
}

inline Pose pose_unflatten(const std::vector<double>& v) {
  if (v.size() % 4 != 0) throw DimensionMismatch("pose_unflatten: length not a multiple of 4");
  Pose p(v.size() / 4);
  for (std::size_t j = 0; j < p.size(); ++j) {
    p[j] = Quat{v[4 * j], v[4 * j + 1], v[4 * j + 2], v[4 * j + 3]};
  }
  return p;
}

// per-joint egrad2rgrad over an ambient 4K gradient
inline PoseTangent pose_rgrad(const Pose& p, const std::vector<double>& ambient_grad) {
  if (ambient_grad.size() != 4 * p.size())
    throw DimensionMismatch("pose_rgrad: gradient length != 4K");
  PoseTangent t(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Quat g{ambient_grad[4 * j], ambient_grad[4 * j + 1], ambient_grad[4 * j + 2],
                 ambient_grad[4 * j + 3]};
    t[j] = egrad2rgrad(p[j], g);
  }
  return t;
}

}  // namespace nrdf
