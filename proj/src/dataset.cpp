#include "nrdf/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "nrdf/errors.hpp"
#include "nrdf/parallel.hpp"
#include "nrdf/textio.hpp"

namespace nrdf {

SyntheticManifold::SyntheticManifold(const SyntheticManifoldConfig& cfg) : cfg_(cfg) {
  if (cfg.k == 0 || cfg.latent_dim == 0) throw DimensionMismatch("manifold: k and latent_dim > 0");
  Rng rng = Rng(cfg.seed).split(0xA11CE);
  joints_.resize(cfg.k);
  for (auto& law : joints_) {
    double ax = rng.normal(), ay = rng.normal(), az = rng.normal();
    double n = std::sqrt(ax * ax + ay * ay + az * az);
    while (n < 1e-12) {
      ax = rng.normal();
      ay = rng.normal();
      az = rng.normal();
      n = std::sqrt(ax * ax + ay * ay + az * az);
    }
    law.axis[0] = ax / n;
    law.axis[1] = ay / n;
    law.axis[2] = az / n;

    const std::size_t n_terms = 1 + rng.uniform_index(3);
    double amp_sum = 0.0;
    law.terms.resize(n_terms);
    for (auto& term : law.terms) {
      term.dir.resize(cfg.latent_dim);
      double dn = 0.0;
      for (auto& c : term.dir) {
        c = rng.normal();
        dn += c * c;
      }
      dn = std::sqrt(std::max(dn, 1e-12));
      for (auto& c : term.dir) c /= dn;
      term.omega = rng.uniform(0.15, 0.35);
      term.amp = rng.uniform(0.3, 1.0);
      term.phase = rng.uniform(0.0, 2.0 * kPi);
      amp_sum += term.amp;
    }
    law.amp_scale = cfg.amplitude / amp_sum;
  }
}

Pose SyntheticManifold::at(const std::vector<double>& z) const {
  if (z.size() != cfg_.latent_dim) throw DimensionMismatch("manifold at(): latent size");
  Pose p(cfg_.k);
  for (std::size_t j = 0; j < cfg_.k; ++j) {
    const JointLaw& law = joints_[j];
    double angle = 0.0;
    for (const auto& term : law.terms) {
      double u = 0.0;
      for (std::size_t d = 0; d < z.size(); ++d) u += term.dir[d] * z[d];
      angle += term.amp * std::sin(2.0 * kPi * term.omega * u + term.phase);
    }
    angle *= law.amp_scale;
    const double half = 0.5 * angle;
    const double s = std::sin(half);
    p[j] = quat_canonical(
        Quat{std::cos(half), law.axis[0] * s, law.axis[1] * s, law.axis[2] * s});
  }
  return p;
}

PoseDataset SyntheticManifold::sample(std::size_t n, Rng& rng) const {
  PoseDataset ds;
  ds.k = cfg_.k;
  ds.poses.reserve(n);
  std::vector<double> z(cfg_.latent_dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& c : z) c = rng.uniform01();
    ds.poses.push_back(at(z));
  }
  return ds;
}

PoseDataset gen_synthetic_manifold(const SyntheticManifoldConfig& cfg) {
  SyntheticManifold m(cfg);
  Rng rng = Rng(cfg.seed).split(0x1A7E47);
  return m.sample(cfg.n_poses, rng);
}

namespace {

void validate_and_canonicalize(Pose& p, const char* where) {
  for (auto& q : p) {
    const double n = quat_norm(q);
    if (std::abs(n - 1.0) > 1e-3)
      throw NonUnitQuaternion(std::string(where) + ": joint norm deviates by more than 1e-3");
    // rescaling a quaternion that is already unit to machine precision would
    // perturb its low bits and break save/load round-trips
    if (std::abs(n - 1.0) > 1e-12) q = quat_scale(q, 1.0 / n);
    q = quat_canonical(q);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

void write_pose_row(std::ofstream& out, const Pose& p) {
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j) out << ' ';
    out << fp17(p[j].w) << ' ' << fp17(p[j].x) << ' ' << fp17(p[j].y) << ' ' << fp17(p[j].z);
  }
}

Pose parse_pose_fields(const std::vector<std::string>& fields, std::size_t k, std::size_t offset,
                       const char* where) {
  Pose p(k);
  for (std::size_t j = 0; j < k; ++j) {
    p[j].w = parse_double(fields[offset + 4 * j], where);
    p[j].x = parse_double(fields[offset + 4 * j + 1], where);
    p[j].y = parse_double(fields[offset + 4 * j + 2], where);
    p[j].z = parse_double(fields[offset + 4 * j + 3], where);
  }
  return p;
}

}  // namespace

void save_poses(const std::string& path, const PoseDataset& ds) {
  auto out = open_out(path);
  out << "NRDF-POSES v1 K=" << ds.k << " N=" << ds.poses.size() << '\n';
  for (const auto& p : ds.poses) {
    if (p.size() != ds.k) throw DimensionMismatch("save_poses: row with wrong joint count");
    write_pose_row(out, p);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

PoseDataset load_poses(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw MalformedFile("empty pose file: " + path);
  const auto head = split_ws(line);
  if (head.size() != 4 || head[0] != "NRDF-POSES" || head[1] != "v1" ||
      head[2].rfind("K=", 0) != 0 || head[3].rfind("N=", 0) != 0)
    throw MalformedFile("bad pose header: " + line);
  const long k = parse_long(head[2].substr(2), "pose header K");
  const long n = parse_long(head[3].substr(2), "pose header N");
  if (k <= 0 || n < 0) throw MalformedFile("bad pose header counts: " + line);

  PoseDataset ds;
  ds.k = static_cast<std::size_t>(k);
  ds.poses.reserve(static_cast<std::size_t>(n));
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != ds.k * 4)
      throw MalformedFile("pose row has wrong field count in " + path);
    Pose p = parse_pose_fields(fields, ds.k, 0, "pose row");
    validate_and_canonicalize(p, "load_poses");
    ds.poses.push_back(std::move(p));
  }
  if (ds.poses.size() != static_cast<std::size_t>(n))
    throw MalformedFile("pose row count differs from header N in " + path);
  return ds;
}

void save_pairs(const std::string& path, std::size_t k, const std::vector<TrainingPair>& pairs) {
  auto out = open_out(path);
  out << "NRDF-PAIRS v1 K=" << k << '\n';
  for (const auto& pr : pairs) {
    if (pr.query.size() != k) throw DimensionMismatch("save_pairs: row with wrong joint count");
    write_pose_row(out, pr.query);
    out << ' ' << pr.nn_index << ' ' << fp17(pr.distance) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<TrainingPair> load_pairs(const std::string& path, std::size_t* k_out) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw MalformedFile("empty pair file: " + path);
  const auto head = split_ws(line);
  if (head.size() != 3 || head[0] != "NRDF-PAIRS" || head[1] != "v1" ||
      head[2].rfind("K=", 0) != 0)
    throw MalformedFile("bad pair header: " + line);
  const long k = parse_long(head[2].substr(2), "pair header K");
  if (k <= 0) throw MalformedFile("bad pair header K: " + line);

  std::vector<TrainingPair> pairs;
  const std::size_t kk = static_cast<std::size_t>(k);
  while (std::getline(in, line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != kk * 4 + 2)
      throw MalformedFile("pair row has wrong field count in " + path);
    TrainingPair pr;
    pr.query = parse_pose_fields(fields, kk, 0, "pair row");
    validate_and_canonicalize(pr.query, "load_pairs");
    pr.nn_index = parse_long(fields[kk * 4], "pair nn_index");
    pr.distance = parse_double(fields[kk * 4 + 1], "pair distance");
    if (pr.nn_index < 0 || pr.distance < 0)
      throw MalformedFile("pair row with negative index or distance in " + path);
    pairs.push_back(std::move(pr));
  }
  if (k_out) *k_out = kk;
  return pairs;
}

std::pair<std::int64_t, double> nn_exact(const PoseDataset& ds, const Pose& query, Metric m) {
  if (ds.poses.empty()) throw EmptyDataset("nn_exact: empty dataset");
  require_same_joints(ds.k, query.size(), "nn_exact");
  std::int64_t best = 0;
  double best_d = pose_dist(ds.poses[0], query, m);
  for (std::size_t i = 1; i < ds.poses.size(); ++i) {
    const double d = pose_dist(ds.poses[i], query, m);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::int64_t>(i);
    }
  }
  return {best, best_d};
}

std::vector<std::pair<std::int64_t, double>> nn_two_stage(const PoseDataset& ds, const Pose& query,
                                                          Metric m, std::size_t kprime,
                                                          std::size_t kfinal) {
  if (ds.poses.empty()) throw EmptyDataset("nn_two_stage: empty dataset");
  require_same_joints(ds.k, query.size(), "nn_two_stage");
  if (kprime == 0 || kfinal == 0 || kfinal > kprime)
    throw DimensionMismatch("nn_two_stage: need 1 <= kfinal <= kprime");
  kprime = std::min(kprime, ds.poses.size());
  kfinal = std::min(kfinal, kprime);

  const std::vector<double> qf = pose_flatten(pose_canonical(query));
  std::vector<std::pair<double, std::int64_t>> pre(ds.poses.size());
  for (std::size_t i = 0; i < ds.poses.size(); ++i) {
    const std::vector<double> pf = pose_flatten(ds.poses[i]);
    double acc = 0.0;
    for (std::size_t c = 0; c < qf.size(); ++c) {
      const double d = pf[c] - qf[c];
      acc += d * d;
    }
    pre[i] = {acc, static_cast<std::int64_t>(i)};
  }
  std::partial_sort(pre.begin(), pre.begin() + static_cast<std::ptrdiff_t>(kprime), pre.end());

  std::vector<std::pair<double, std::int64_t>> rerank(kprime);
  for (std::size_t c = 0; c < kprime; ++c) {
    const std::int64_t idx = pre[c].second;
    rerank[c] = {pose_dist(ds.poses[static_cast<std::size_t>(idx)], query, m), idx};
  }
  std::sort(rerank.begin(), rerank.end());

  std::vector<std::pair<std::int64_t, double>> out(kfinal);
  for (std::size_t c = 0; c < kfinal; ++c) out[c] = {rerank[c].second, rerank[c].first};
  return out;
}

std::vector<TrainingPair> build_training_set(const PoseDataset& ds, std::size_t n_pairs,
                                             const SamplerConfig& sampler, Metric m,
                                             const Rng& rng, int threads) {
  if (ds.poses.empty()) throw EmptyDataset("build_training_set: empty dataset");
  std::vector<TrainingPair> pairs(n_pairs);
  parallel_for(n_pairs, threads, [&](std::size_t i) {
    Rng item = rng.split(i);
    const std::size_t seed_idx = item.uniform_index(ds.poses.size());
    TrainingPair pr;
    if (sampler.dist.kind == DistKind::kPoseNdf) {
      pr.query = posendf_perturb(ds.poses[seed_idx], sampler.dist.a, item);
    } else {
      pr.query = perturb_pose(ds.poses[seed_idx], sampler, item);
    }
    const auto nn = nn_exact(ds, pr.query, m);
    pr.nn_index = nn.first;
    pr.distance = nn.second;
    pairs[i] = std::move(pr);
  });
  return pairs;
}

}  // namespace nrdf
