#pragma once

#include <memory>
#include <vector>

#include "nrdf/netfield.hpp"
#include "nrdf/pose.hpp"

namespace nrdf {

struct FieldEval {
  double value = 0.0;
  std::vector<double> ambient_grad;  // 4K, (w x y z) per joint
};

/// Scalar function of a pose with its ambient gradient. Implementations must
/// accept any unit-quaternion pose; callers pass sign-canonical poses.
class ScalarField {
 public:
  virtual ~ScalarField() = default;
  virtual std::size_t joints() const = 0;
  virtual FieldEval eval(const Pose& pose) const = 0;
};

/// Analytic distance to a fixed target pose under a product metric. The
/// gradient comes from the per-joint log maps; joints already at the target
/// contribute zero.
class OracleDistanceField : public ScalarField {
 public:
  OracleDistanceField(Pose target, Metric metric);
  std::size_t joints() const override { return target_.size(); }
  FieldEval eval(const Pose& pose) const override;

 private:
  Pose target_;
  Metric metric_;
};

/// Trained network as a field; value is the forward pass, gradient the
/// hand-rolled input backprop.
class ModelField : public ScalarField {
 public:
  explicit ModelField(const DistanceFieldModel& model) : model_(&model) {}
  std::size_t joints() const override { return model_->arch.k; }
  FieldEval eval(const Pose& pose) const override;

 private:
  const DistanceFieldModel* model_;
};

/// weights[i] * fields[i], summed values and gradients
class WeightedSumField : public ScalarField {
 public:
  WeightedSumField(std::vector<const ScalarField*> fields, std::vector<double> weights);
  std::size_t joints() const override;
  FieldEval eval(const Pose& pose) const override;

 private:
  std::vector<const ScalarField*> fields_;
  std::vector<double> weights_;
};

struct RGrad {
  double value = 0.0;
  PoseTangent direction;  // unit global norm
  double raw_norm = 0.0;
};

/// Riemannian gradient of the field at a sign-canonical pose: ambient gradient
/// split per joint, passed through egrad2rgrad, then normalized globally.
/// Throws VanishingGradient when the tangent norm is below 1e-12.
RGrad riemannian_grad(const ScalarField& field, const Pose& pose);

/// One distance-scaled descent update: Exp_pose(-alpha * value * direction).
/// Per-joint arcs are subject to the exponential's pi bound.
Pose rdfgrad_step(const Pose& pose, double value, const PoseTangent& unit_direction, double alpha);

struct ProjectionConfig {
  double alpha = 1.0;
  double tol = 1e-5;          // on |f_prev - f_cur|
  std::size_t max_iters = 200;
  double max_per_joint_step = kPi / 2 - 1e-3;  // driver-level cap, direction preserved
  bool record_trajectory = false;
};

struct TrajectoryRow {
  std::size_t iter = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  Pose pose;
};

struct ProjectionResult {
  Pose pose;
  std::size_t iterations = 0;  // update steps applied
  bool converged = false;
  double f_initial = 0.0;
  double f_final = 0.0;
  std::vector<TrajectoryRow> trajectory;
};

/// Projects a pose toward the field's zero level set with distance-scaled
/// steps. Stops when the predicted value changes by less than tol between
/// iterations, or when the gradient vanishes; converged is false only when
/// max_iters runs out first. Iterates are re-canonicalized each step.
ProjectionResult project(const ScalarField& field, const Pose& start,
                         const ProjectionConfig& cfg);

struct EuclideanConfig {
  double lr = 0.01;
  double tol = 1e-5;
  std::size_t max_iters = 200;
};

/// Baseline: ambient gradient descent with per-joint renormalization.
ProjectionResult project_euclidean(const ScalarField& field, const Pose& start,
                                   const EuclideanConfig& cfg);

struct DescentConfig {
  double step = 5e-3;
  double tol = 1e-9;
  std::size_t max_iters = 1000;
  double max_per_joint_step = kPi / 2 - 1e-3;
};

/// Fixed-step Riemannian descent on an arbitrary objective (raw gradient, not
/// normalized); used by downstream fitting tasks.
ProjectionResult riemannian_descent(const ScalarField& objective, const Pose& start,
                                    const DescentConfig& cfg);

}  // namespace nrdf
