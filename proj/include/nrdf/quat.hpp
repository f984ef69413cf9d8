#pragma once

#include <algorithm>
#include <cmath>

#include "nrdf/errors.hpp"

namespace nrdf {

// unit quaternion (w, x, y, z); also used as a plain ambient 4-vector where noted
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

// tangent vector in the identity algebra, stored as (0, v); w is kept so
// tangency is visible in the data, every constructor below writes it as 0
struct Tangent {
  double w = 0.0, x = 0.0, y = 0.0, z = 0.0;
};

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline Quat quat_identity() { return Quat{1.0, 0.0, 0.0, 0.0}; }

inline double quat_dot(const Quat& a, const Quat& b) {
  return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double quat_norm(const Quat& q) { return std::sqrt(quat_dot(q, q)); }

inline Quat quat_scale(const Quat& q, double s) { return Quat{q.w * s, q.x * s, q.y * s, q.z * s}; }

inline Quat quat_add(const Quat& a, const Quat& b) {
  return Quat{a.w + b.w, a.x + b.x, a.y + b.y, a.z + b.z};
}

inline Quat quat_normalized(const Quat& q) {
  const double n = quat_norm(q);
  if (n < 1e-300) throw NonUnitQuaternion("cannot normalize a zero quaternion");
  return quat_scale(q, 1.0 / n);
}

// representative with w >= 0 of the antipodal pair {q, -q}
inline Quat quat_canonical(const Quat& q) {
  return q.w < 0.0 ? Quat{-q.w, -q.x, -q.y, -q.z} : q;
}

inline Quat quat_conj(const Quat& q) { return Quat{q.w, -q.x, -q.y, -q.z}; }

// Hamilton product
inline Quat quat_mul(const Quat& a, const Quat& b) {
  return Quat{a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
              a.w * b.x + b.w * a.x + a.y * b.z - a.z * b.y,
              a.w * b.y + b.w * a.y + a.z * b.x - a.x * b.z,
              a.w * b.z + b.w * a.z + a.x * b.y - a.y * b.x};
}

inline double tangent_norm(const Tangent& t) {
  return std::sqrt(t.x * t.x + t.y * t.y + t.z * t.z);
}

inline Tangent tangent_scale(const Tangent& t, double s) {
  return Tangent{0.0, t.x * s, t.y * s, t.z * s};
}

// group exponential at the identity; requires ||v|| < pi
inline Quat quat_exp(const Tangent& t) {
  const double theta = tangent_norm(t);
  if (theta >= kPi) throw StepTooLarge("quat_exp: tangent norm >= pi");
  double s;
  if (theta < 1e-6) {
    s = 1.0 - theta * theta / 6.0;
  } else {
    s = std::sin(theta) / theta;
  }
  return Quat{std::cos(theta), t.x * s, t.y * s, t.z * s};
}

// group logarithm of a unit quaternion, antipodal flip applied so the
// result has norm <= pi/2; zero rotation maps to the zero tangent
inline Tangent quat_log(const Quat& q_in) {
  Quat q = quat_canonical(q_in);
  const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (vn < 1e-15) return Tangent{};
  const double theta = std::atan2(vn, q.w);
  const double s = theta / vn;
  return Tangent{0.0, q.x * s, q.y * s, q.z * s};
}

// Exp_q(t) = q * exp(t), left translation
inline Quat exp_map(const Quat& q, const Tangent& t) { return quat_mul(q, quat_exp(t)); }

// Log_q(p) = log(q^-1 p); exp_map(q, log_map(q, p)) recovers p up to sign
inline Tangent log_map(const Quat& q, const Quat& p) {
  return quat_log(quat_mul(quat_conj(q), p));
}

// geodesic distance on the double-covered rotation group, range [0, pi/2]
inline double geodesic_dist(const Quat& a, const Quat& b) {
  const double c = std::min(std::abs(quat_dot(a, b)), 1.0);
  return std::acos(c);
}

// ambient gradient v to the canonical tangent frame: project onto T_q with
// I - qq^T, then pull back through left translation by q^-1; requires a
// sign-canonical q, the transport degenerates as w -> -1
inline Tangent egrad2rgrad(const Quat& q, const Quat& v) {
  if (1.0 + q.w < 1e-8) throw NearSingularTransport("egrad2rgrad: 1 + w below 1e-8");
  const double radial = quat_dot(q, v);
  const Quat u = quat_add(v, quat_scale(q, -radial));
  const Quat r = quat_mul(quat_conj(q), u);
  return Tangent{0.0, r.x, r.y, r.z};
}

// per-joint geodesic interpolation endpoint helper
inline Quat geodesic_interp(const Quat& a, const Quat& b, double t) {
  return exp_map(a, tangent_scale(log_map(a, b), t));
}

inline bool quat_equal_rotation(const Quat& a, const Quat& b, double tol) {
  return geodesic_dist(a, b) <= tol;
}

}  // namespace nrdf
