#include "nrdf/projection.hpp"

#include <cmath>

#include "nrdf/errors.hpp"

namespace nrdf {

OracleDistanceField::OracleDistanceField(Pose target, Metric metric)
    : target_(pose_canonical(std::move(target))), metric_(metric) {}

FieldEval OracleDistanceField::eval(const Pose& pose) const {
  require_same_joints(pose.size(), target_.size(), "OracleDistanceField");
  FieldEval out;
  out.ambient_grad.assign(4 * pose.size(), 0.0);

  std::vector<double> theta(pose.size());
  double value = 0.0;
  for (std::size_t j = 0; j < pose.size(); ++j) {
    theta[j] = geodesic_dist(pose[j], target_[j]);
    value += (metric_ == Metric::kL1) ? theta[j] : theta[j] * theta[j];
  }
  out.value = (metric_ == Metric::kL1) ? value : std::sqrt(value);

  for (std::size_t j = 0; j < pose.size(); ++j) {
    if (theta[j] < 1e-9) continue;
    double chain;
    if (metric_ == Metric::kL1) {
      chain = 1.0;
    } else {
      if (out.value < 1e-12) continue;
      chain = theta[j] / out.value;
    }
    const double c = quat_dot(pose[j], target_[j]);
    const double sign = c >= 0.0 ? 1.0 : -1.0;
    const double s = std::sqrt(std::max(1.0 - c * c, 1e-30));
    const double scale = -chain * sign / s;
    out.ambient_grad[4 * j] = scale * target_[j].w;
    out.ambient_grad[4 * j + 1] = scale * target_[j].x;
    out.ambient_grad[4 * j + 2] = scale * target_[j].y;
    out.ambient_grad[4 * j + 3] = scale * target_[j].z;
  }
  return out;
}

FieldEval ModelField::eval(const Pose& pose) const {
  FieldEval out;
  out.ambient_grad = input_gradient(*model_, pose, &out.value);
  return out;
}

WeightedSumField::WeightedSumField(std::vector<const ScalarField*> fields,
                                   std::vector<double> weights)
    : fields_(std::move(fields)), weights_(std::move(weights)) {
  if (fields_.empty() || fields_.size() != weights_.size())
    throw DimensionMismatch("WeightedSumField: fields and weights must match and be nonempty");
  for (std::size_t i = 1; i < fields_.size(); ++i)
    require_same_joints(fields_[i]->joints(), fields_[0]->joints(), "WeightedSumField");
}

std::size_t WeightedSumField::joints() const { return fields_[0]->joints(); }

FieldEval WeightedSumField::eval(const Pose& pose) const {
  FieldEval out;
  out.ambient_grad.assign(4 * joints(), 0.0);
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const FieldEval part = fields_[i]->eval(pose);
    out.value += weights_[i] * part.value;
    for (std::size_t c = 0; c < out.ambient_grad.size(); ++c)
      out.ambient_grad[c] += weights_[i] * part.ambient_grad[c];
  }
  return out;
}

RGrad riemannian_grad(const ScalarField& field, const Pose& pose) {
  require_same_joints(pose.size(), field.joints(), "riemannian_grad");
  const FieldEval ev = field.eval(pose);
  RGrad out;
  out.value = ev.value;
  out.direction = pose_rgrad(pose, ev.ambient_grad);
  out.raw_norm = tangent_global_norm(out.direction);
  if (out.raw_norm < 1e-12) throw VanishingGradient("riemannian_grad: tangent norm below 1e-12");
  const double inv = 1.0 / out.raw_norm;
  for (auto& t : out.direction) t = tangent_scale(t, inv);
  return out;
}

Pose rdfgrad_step(const Pose& pose, double value, const PoseTangent& unit_direction,
                  double alpha) {
  return pose_exp(pose, tangent_scaled(unit_direction, -alpha * value));
}

namespace {

// rescales the whole step when some joint would move past the cap
double capped_scale(double scale, const PoseTangent& unit_direction, double cap) {
  const double mj = tangent_max_joint_norm(unit_direction);
  if (mj > 0.0 && scale * mj > cap) return cap / mj;
  return scale;
}

}  // namespace

ProjectionResult project(const ScalarField& field, const Pose& start,
                         const ProjectionConfig& cfg) {
  ProjectionResult res;
  res.pose = pose_canonical(start);
  double f_prev = 0.0;
  bool have_prev = false;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    RGrad rg;
    try {
      rg = riemannian_grad(field, res.pose);
    } catch (const VanishingGradient&) {
      const double f = field.eval(res.pose).value;
      if (!have_prev) res.f_initial = f;
      res.f_final = f;
      res.converged = true;
      return res;
    }
    if (!have_prev) res.f_initial = rg.value;
    if (cfg.record_trajectory)
      res.trajectory.push_back(TrajectoryRow{res.iterations, rg.value, rg.raw_norm, res.pose});
    if (have_prev && std::abs(rg.value - f_prev) < cfg.tol) {
      res.f_final = rg.value;
      res.converged = true;
      return res;
    }
    f_prev = rg.value;
    have_prev = true;

    const double scale =
        capped_scale(cfg.alpha * rg.value, rg.direction, cfg.max_per_joint_step);
    res.pose = pose_canonical(pose_exp(res.pose, tangent_scaled(rg.direction, -scale)));
    ++res.iterations;
  }
  res.f_final = field.eval(res.pose).value;
  res.converged = false;
  if (cfg.record_trajectory) {
    const FieldEval ev = field.eval(res.pose);
    res.trajectory.push_back(TrajectoryRow{res.iterations, ev.value, 0.0, res.pose});
  }
  return res;
}

ProjectionResult project_euclidean(const ScalarField& field, const Pose& start,
                                   const EuclideanConfig& cfg) {
  ProjectionResult res;
  res.pose = pose_canonical(start);
  double f_prev = 0.0;
  bool have_prev = false;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const FieldEval ev = field.eval(res.pose);
    if (!have_prev) res.f_initial = ev.value;
    if (have_prev && std::abs(ev.value - f_prev) < cfg.tol) {
      res.f_final = ev.value;
      res.converged = true;
      return res;
    }
    f_prev = ev.value;
    have_prev = true;

    std::vector<double> flat = pose_flatten(res.pose);
    for (std::size_t c = 0; c < flat.size(); ++c) flat[c] -= cfg.lr * ev.ambient_grad[c];
    Pose next = pose_unflatten(flat);
    for (auto& q : next) q = quat_canonical(quat_normalized(q));
    res.pose = std::move(next);
    ++res.iterations;
  }
  res.f_final = field.eval(res.pose).value;
  res.converged = false;
  return res;
}

ProjectionResult riemannian_descent(const ScalarField& objective, const Pose& start,
                                    const DescentConfig& cfg) {
  ProjectionResult res;
  res.pose = pose_canonical(start);
  double f_prev = 0.0;
  bool have_prev = false;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const FieldEval ev = objective.eval(res.pose);
    if (!have_prev) res.f_initial = ev.value;
    if (have_prev && std::abs(ev.value - f_prev) < cfg.tol) {
      res.f_final = ev.value;
      res.converged = true;
      return res;
    }
    f_prev = ev.value;
    have_prev = true;

    PoseTangent g = pose_rgrad(res.pose, ev.ambient_grad);
    const double gnorm = tangent_global_norm(g);
    if (gnorm < 1e-14) {
      res.f_final = ev.value;
      res.converged = true;
      return res;
    }
    double scale = cfg.step;
    const double mj = tangent_max_joint_norm(g);
    if (scale * mj > cfg.max_per_joint_step) scale = cfg.max_per_joint_step / mj;
    res.pose = pose_canonical(pose_exp(res.pose, tangent_scaled(g, -scale)));
    ++res.iterations;
  }
  res.f_final = objective.eval(res.pose).value;
  res.converged = false;
  return res;
}

}  // namespace nrdf
