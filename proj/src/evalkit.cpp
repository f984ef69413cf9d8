#include "nrdf/evalkit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "nrdf/errors.hpp"
#include "nrdf/parallel.hpp"
#include "nrdf/textio.hpp"

namespace nrdf {

void Skeleton::validate() const {
  if (parents.empty()) throw DimensionMismatch("skeleton: no joints");
  if (offsets.size() != parents.size())
    throw DimensionMismatch("skeleton: offsets and parents must match");
  for (std::size_t j = 0; j < parents.size(); ++j) {
    if (parents[j] >= static_cast<std::int64_t>(j) || parents[j] < -1)
      throw DimensionMismatch("skeleton: parent index must be -1 or less than the joint");
  }
}

Skeleton make_chain(std::size_t k, double bone_length) {
  Skeleton s;
  s.parents.resize(k);
  s.offsets.assign(k, {bone_length, 0.0, 0.0});
  for (std::size_t j = 0; j < k; ++j) s.parents[j] = static_cast<std::int64_t>(j) - 1;
  if (k > 0) s.offsets[0] = {0.0, 0.0, 0.0};
  return s;
}

std::array<double, 3> rotate_vec(const Quat& q, const std::array<double, 3>& v) {
  const Quat p{0.0, v[0], v[1], v[2]};
  const Quat r = quat_mul(quat_mul(q, p), quat_conj(q));
  return {r.x, r.y, r.z};
}

std::vector<Quat> global_rotations(const Skeleton& skel, const Pose& pose) {
  skel.validate();
  require_same_joints(skel.joints(), pose.size(), "global_rotations");
  std::vector<Quat> g(pose.size());
  for (std::size_t j = 0; j < pose.size(); ++j) {
    const std::int64_t par = skel.parents[j];
    g[j] = par < 0 ? pose[j] : quat_mul(g[static_cast<std::size_t>(par)], pose[j]);
  }
  return g;
}

std::vector<std::array<double, 3>> forward_kinematics(const Skeleton& skel, const Pose& pose) {
  const std::vector<Quat> g = global_rotations(skel, pose);
  std::vector<std::array<double, 3>> pos(pose.size(), {0.0, 0.0, 0.0});
  for (std::size_t j = 0; j < pose.size(); ++j) {
    const std::int64_t par = skel.parents[j];
    if (par < 0) continue;
    const auto rotated = rotate_vec(g[static_cast<std::size_t>(par)], skel.offsets[j]);
    const auto& pp = pos[static_cast<std::size_t>(par)];
    pos[j] = {pp[0] + rotated[0], pp[1] + rotated[1], pp[2] + rotated[2]};
  }
  return pos;
}

SummaryStats summarize(std::vector<double> values) {
  if (values.empty()) throw EmptyDataset("summarize: no values");
  SummaryStats s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  double acc = 0.0;
  for (double v : values) acc += v;
  s.mean = acc / static_cast<double>(values.size());
  const std::size_t n = values.size();
  s.median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return s;
}

std::vector<double> dnn_values(const PoseDataset& ref, const std::vector<Pose>& poses, Metric m,
                               int threads) {
  std::vector<double> out(poses.size());
  parallel_for(poses.size(), threads,
               [&](std::size_t i) { out[i] = nn_exact(ref, poses[i], m).second; });
  return out;
}

namespace {

double mean_joint_distance_m(const Skeleton& skel, const Pose& a, const Pose& b) {
  const auto pa = forward_kinematics(skel, a);
  const auto pb = forward_kinematics(skel, b);
  double acc = 0.0;
  for (std::size_t j = 0; j < pa.size(); ++j) {
    const double dx = pa[j][0] - pb[j][0];
    const double dy = pa[j][1] - pb[j][1];
    const double dz = pa[j][2] - pb[j][2];
    acc += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return acc / static_cast<double>(pa.size());
}

}  // namespace

double metric_apd_cm(const Skeleton& skel, const std::vector<Pose>& poses) {
  if (poses.size() < 2) throw EmptyDataset("metric_apd_cm: need at least two poses");
  double acc = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    for (std::size_t j = i + 1; j < poses.size(); ++j) {
      acc += mean_joint_distance_m(skel, poses[i], poses[j]);
      ++pairs;
    }
  }
  return 100.0 * acc / static_cast<double>(pairs);
}

double metric_m2m_cm(const Skeleton& skel, const Pose& a, const Pose& b) {
  return 100.0 * mean_joint_distance_m(skel, a, b);
}

double metric_dq_m2m(const Skeleton& skel, const Pose& a, const Pose& b, double lambda_q) {
  const auto ga = global_rotations(skel, a);
  const auto gb = global_rotations(skel, b);
  double acc = 0.0;
  for (std::size_t j = 0; j < ga.size(); ++j) acc += geodesic_dist(ga[j], gb[j]);
  return metric_m2m_cm(skel, a, b) + lambda_q * acc / static_cast<double>(ga.size());
}

double frechet_gaussian(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b) {
  if (a.size() < 2 || b.size() < 2) throw EmptyDataset("frechet_gaussian: need >= 2 points each");
  const std::size_t dim = a[0].size();
  if (dim == 0 || b[0].size() != dim)
    throw DimensionMismatch("frechet_gaussian: dimension mismatch");

  auto fit = [&](const std::vector<std::vector<double>>& pts, Eigen::VectorXd& mu,
                 Eigen::MatrixXd& cov) {
    const std::size_t n = pts.size();
    mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& p : pts) {
      if (p.size() != dim) throw DimensionMismatch("frechet_gaussian: ragged cloud");
      for (std::size_t c = 0; c < dim; ++c) mu[static_cast<Eigen::Index>(c)] += p[c];
    }
    mu /= static_cast<double>(n);
    cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    Eigen::VectorXd d(static_cast<Eigen::Index>(dim));
    for (const auto& p : pts) {
      for (std::size_t c = 0; c < dim; ++c) d[static_cast<Eigen::Index>(c)] = p[c];
      d -= mu;
      cov.noalias() += d * d.transpose();
    }
    cov /= static_cast<double>(n - 1);
  };

  Eigen::VectorXd mu1, mu2;
  Eigen::MatrixXd c1, c2;
  fit(a, mu1, c1);
  fit(b, mu2, c2);

  auto sqrtm = [](const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = std::sqrt(std::max(ev[i], 0.0));
    return Eigen::MatrixXd(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
  };

  const Eigen::MatrixXd s1 = sqrtm(c1);
  const Eigen::MatrixXd inner = s1 * c2 * s1;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (inner + inner.transpose()));
  double tr_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    tr_sqrt += std::sqrt(std::max(es.eigenvalues()[i], 0.0));

  const double mean_term = (mu1 - mu2).squaredNorm();
  return mean_term + c1.trace() + c2.trace() - 2.0 * tr_sqrt;
}

double metric_fid(const std::vector<Pose>& a, const std::vector<Pose>& b) {
  auto flatten_all = [](const std::vector<Pose>& poses) {
    std::vector<std::vector<double>> out;
    out.reserve(poses.size());
    for (const auto& p : poses) out.push_back(pose_flatten(pose_canonical(p)));
    return out;
  };
  return frechet_gaussian(flatten_all(a), flatten_all(b));
}

Histogram hist_realized_distances(const PoseDataset& ref, const std::vector<Pose>& poses, Metric m,
                                  std::size_t n_bins, int threads) {
  if (n_bins == 0) throw DimensionMismatch("hist_realized_distances: n_bins must be positive");
  const std::vector<double> d = dnn_values(ref, poses, m, threads);
  Histogram h;
  h.lo = 0.0;
  h.hi = 0.0;
  for (double v : d) h.hi = std::max(h.hi, v);
  if (h.hi <= 0.0) h.hi = 1e-12;
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i)
    h.edges[i] = h.lo + (h.hi - h.lo) * static_cast<double>(i) / static_cast<double>(n_bins);
  h.counts.assign(n_bins, 0);
  for (double v : d) {
    std::size_t bin = static_cast<std::size_t>(
        std::min(static_cast<double>(n_bins - 1),
                 std::floor(v / h.hi * static_cast<double>(n_bins))));
    ++h.counts[bin];
  }
  return h;
}

void save_histogram_csv(const std::string& path, const Histogram& hist) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i)
    out << fp17(hist.edges[i]) << ',' << fp17(hist.edges[i + 1]) << ',' << hist.counts[i] << '\n';
  if (!out) throw IoError("write failed: " + path);
}

MetricReport evaluate_set(const Skeleton& skel, const PoseDataset& ref,
                          const std::vector<Pose>& poses, Metric m,
                          const std::vector<Pose>* paired_gt, double lambda_q, int threads) {
  if (poses.empty()) throw EmptyDataset("evaluate_set: no poses");
  MetricReport rep;
  rep.d_nn = summarize(dnn_values(ref, poses, m, threads));
  rep.apd_cm = poses.size() >= 2 ? metric_apd_cm(skel, poses)
                                 : std::numeric_limits<double>::quiet_NaN();
  rep.fid = metric_fid(poses, ref.poses);
  if (paired_gt) {
    if (paired_gt->size() != poses.size())
      throw DimensionMismatch("evaluate_set: paired ground truth size mismatch");
    double m2m = 0.0, dqm = 0.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      m2m += metric_m2m_cm(skel, poses[i], (*paired_gt)[i]);
      dqm += metric_dq_m2m(skel, poses[i], (*paired_gt)[i], lambda_q);
    }
    rep.m2m_cm = m2m / static_cast<double>(poses.size());
    rep.dq_m2m = dqm / static_cast<double>(poses.size());
    rep.has_pairwise = true;
  } else {
    rep.m2m_cm = std::numeric_limits<double>::quiet_NaN();
    rep.dq_m2m = std::numeric_limits<double>::quiet_NaN();
  }
  return rep;
}

FkDataField::FkDataField(Skeleton skel, std::vector<std::size_t> observed,
                         std::vector<std::array<double, 3>> targets, double fd_step)
    : skel_(std::move(skel)), observed_(std::move(observed)), targets_(std::move(targets)),
      fd_step_(fd_step) {
  skel_.validate();
  if (observed_.empty()) throw EmptyDataset("FkDataField: no observed joints");
  if (observed_.size() != targets_.size())
    throw DimensionMismatch("FkDataField: observed and targets must match");
  for (auto j : observed_)
    if (j >= skel_.joints()) throw DimensionMismatch("FkDataField: observed index out of range");
}

namespace {

double data_value(const Skeleton& skel, const std::vector<std::size_t>& observed,
                  const std::vector<std::array<double, 3>>& targets, const Pose& pose) {
  const auto pos = forward_kinematics(skel, pose);
  double acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const auto& p = pos[observed[i]];
    const auto& t = targets[i];
    const double dx = p[0] - t[0], dy = p[1] - t[1], dz = p[2] - t[2];
    acc += std::sqrt(dx * dx + dy * dy + dz * dz);
  }
  return acc;
}

}  // namespace

double FkDataField::observed_mean_error(const Pose& pose) const {
  return data_value(skel_, observed_, targets_, pose) / static_cast<double>(observed_.size());
}

FieldEval FkDataField::eval(const Pose& pose) const {
  require_same_joints(pose.size(), skel_.joints(), "FkDataField");
  FieldEval out;
  out.value = data_value(skel_, observed_, targets_, pose);
  out.ambient_grad.assign(4 * pose.size(), 0.0);

  Pose work = pose;
  for (std::size_t j = 0; j < pose.size(); ++j) {
    for (int axis = 0; axis < 3; ++axis) {
      Tangent t;
      (axis == 0 ? t.x : axis == 1 ? t.y : t.z) = fd_step_;
      work[j] = exp_map(pose[j], t);
      const double plus = data_value(skel_, observed_, targets_, work);
      (axis == 0 ? t.x : axis == 1 ? t.y : t.z) = -fd_step_;
      work[j] = exp_map(pose[j], t);
      const double minus = data_value(skel_, observed_, targets_, work);
      work[j] = pose[j];
      const double g = (plus - minus) / (2.0 * fd_step_);

      // tangent axis embedded at q; egrad2rgrad recovers g on it exactly
      Quat basis{0.0, 0.0, 0.0, 0.0};
      (axis == 0 ? basis.x : axis == 1 ? basis.y : basis.z) = 1.0;
      const Quat emb = quat_mul(pose[j], basis);
      out.ambient_grad[4 * j] += g * emb.w;
      out.ambient_grad[4 * j + 1] += g * emb.x;
      out.ambient_grad[4 * j + 2] += g * emb.y;
      out.ambient_grad[4 * j + 3] += g * emb.z;
    }
  }
  return out;
}

IkResult ik_solve(const IkProblem& problem, const Pose& init, const IkConfig& cfg) {
  problem.skeleton.validate();
  require_same_joints(problem.skeleton.joints(), init.size(), "ik_solve");

  FkDataField data(problem.skeleton, problem.observed, problem.targets);
  IkResult res;
  res.pose = pose_canonical(init);
  res.prior_initial = problem.prior ? problem.prior->eval(res.pose).value : 0.0;
  res.observed_error = data.observed_mean_error(res.pose);
  if (res.observed_error < cfg.mpjpe_tol) {
    res.reached_tol = true;
    res.prior_final = res.prior_initial;
    return res;
  }

  if (problem.prior && cfg.warmup_max_iters > 0) {
    ProjectionConfig pc;
    pc.alpha = cfg.warmup_alpha;
    pc.tol = cfg.warmup_tol;
    pc.max_iters = cfg.warmup_max_iters;
    const ProjectionResult warm = project(*problem.prior, res.pose, pc);
    res.pose = warm.pose;
    res.iterations += warm.iterations;
  }

  std::vector<const ScalarField*> fields{&data};
  std::vector<double> weights{1.0};
  if (problem.prior) {
    fields.push_back(problem.prior);
    weights.push_back(problem.lambda_pose);
  }
  WeightedSumField objective(fields, weights);

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    res.observed_error = data.observed_mean_error(res.pose);
    if (res.observed_error < cfg.mpjpe_tol) {
      res.reached_tol = true;
      break;
    }
    const FieldEval ev = objective.eval(res.pose);
    PoseTangent g = pose_rgrad(res.pose, ev.ambient_grad);
    const double gnorm = tangent_global_norm(g);
    if (gnorm < 1e-14) break;
    double scale = cfg.step;
    const double mj = tangent_max_joint_norm(g);
    const double cap = kPi / 2 - 1e-3;
    if (scale * mj > cap) scale = cap / mj;
    res.pose = pose_canonical(pose_exp(res.pose, tangent_scaled(g, -scale)));
    ++res.iterations;
  }
  res.observed_error = data.observed_mean_error(res.pose);
  if (res.observed_error < cfg.mpjpe_tol) res.reached_tol = true;
  res.prior_final = problem.prior ? problem.prior->eval(res.pose).value : 0.0;
  return res;
}

GeneratedSet generate_diverse(const ScalarField& field, const PoseDataset& ds,
                              const GenerateConfig& cfg, const Rng& rng) {
  if (ds.poses.empty()) throw EmptyDataset("generate_diverse: empty dataset");
  GeneratedSet out;
  out.poses.resize(cfg.n);
  out.f_initial.resize(cfg.n);
  out.f_final.resize(cfg.n);
  out.iterations.resize(cfg.n);
  out.converged.resize(cfg.n);
  parallel_for(cfg.n, cfg.threads, [&](std::size_t i) {
    Rng item = rng.split(i);
    Pose seed;
    if (cfg.ambient_seeds) {
      seed = ambient_gaussian_pose(ds.k, item);
    } else {
      const auto& base = ds.poses[item.uniform_index(ds.poses.size())];
      seed = perturb_pose(base, cfg.sampler, item);
    }
    const ProjectionResult pr = project(field, seed, cfg.projection);
    out.poses[i] = pr.pose;
    out.f_initial[i] = pr.f_initial;
    out.f_final[i] = pr.f_final;
    out.iterations[i] = pr.iterations;
    out.converged[i] = pr.converged ? 1 : 0;
  });
  return out;
}

}  // namespace nrdf
