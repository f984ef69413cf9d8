#include <chrono>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nrdf/dataset.hpp"
#include "nrdf/errors.hpp"
#include "nrdf/evalkit.hpp"
#include "nrdf/netfield.hpp"
#include "nrdf/parallel.hpp"
#include "nrdf/projection.hpp"
#include "nrdf/sampling.hpp"
#include "nrdf/textio.hpp"

namespace {

using nlohmann::json;
using namespace nrdf;

constexpr const char* kArtifactVersion = "1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct CommonOpts {
  std::uint64_t seed = 1;
  int threads = 0;
  bool deterministic = false;

  int effective_threads() const { return deterministic ? 1 : resolve_threads(threads); }
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("--threads", c.threads, "worker threads, 0 = NRDF_THREADS or 1");
  cmd->add_flag("--deterministic", c.deterministic, "single-threaded bit-reproducible mode");
}

struct ManifestInfo {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

void write_manifest(const std::string& primary_out, const ManifestInfo& info) {
  const auto elapsed = std::chrono::steady_clock::now() - info.start;
  json j;
  j["command"] = info.command;
  j["argv"] = info.argv;
  j["seed"] = info.seed;
  j["threads"] = info.threads;
  j["deterministic"] = info.deterministic;
  j["inputs"] = info.inputs;
  j["outputs"] = info.outputs;
  j["artifact_version"] = kArtifactVersion;
  j["duration_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  const std::string path = primary_out + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

Metric parse_metric(const std::string& name) {
  if (name == "l1") return Metric::kL1;
  if (name == "l2") return Metric::kL2;
  throw CLI::ValidationError("--metric", "expected l1 or l2");
}

DistanceSpec parse_dist_flag(const std::string& text) {
  try {
    return parse_distance_spec(text);
  } catch (const MalformedFile& e) {
    throw CLI::ValidationError("--dist", e.what());
  }
}

// ---------------------------------------------------------------------------

struct SynthOpts {
  CommonOpts common;
  std::size_t k = 5;
  std::size_t latent_dim = 2;
  std::size_t n = 1000;
  double amplitude = 0.8;
  std::string out;
};

int run_synth(const SynthOpts& o, ManifestInfo info) {
  SyntheticManifoldConfig cfg;
  cfg.k = o.k;
  cfg.latent_dim = o.latent_dim;
  cfg.n_poses = o.n;
  cfg.seed = o.common.seed;
  cfg.amplitude = o.amplitude;
  const PoseDataset ds = gen_synthetic_manifold(cfg);
  save_poses(o.out, ds);
  info.outputs = {o.out};
  write_manifest(o.out, info);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SampleOpts {
  CommonOpts common;
  std::string poses;
  std::string dist = "halfgauss:0.7853981633974483";
  std::size_t n = 1000;
  std::string metric = "l1";
  std::size_t bins = 20;
  std::string out;
  std::string hist;
};

int run_sample(const SampleOpts& o, ManifestInfo info) {
  const PoseDataset ds = load_poses(o.poses);
  const Metric metric = parse_metric(o.metric);
  SamplerConfig sampler;
  sampler.dist = parse_dist_flag(o.dist);
  const int threads = o.common.effective_threads();

  const std::vector<TrainingPair> pairs =
      build_training_set(ds, o.n, sampler, metric, Rng(o.common.seed), threads);
  save_pairs(o.out, ds.k, pairs);

  std::vector<Pose> queries;
  queries.reserve(pairs.size());
  for (const auto& p : pairs) queries.push_back(p.query);
  const Histogram h = hist_realized_distances(ds, queries, metric, o.bins, threads);
  const std::string hist_path = o.hist.empty() ? o.out + ".hist.csv" : o.hist;
  save_histogram_csv(hist_path, h);

  info.inputs = {o.poses};
  info.outputs = {o.out, hist_path};
  write_manifest(o.out, info);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainOpts {
  CommonOpts common;
  std::string pairs;
  std::string poses;
  std::string mode = "nrdf";
  std::string loss = "mae";
  std::string metric = "l1";
  double lr = 1e-4;
  std::size_t epochs = 20;
  std::size_t batch = 128;
  double stage2_frac = 0.25;
  std::size_t fm_samples = 20000;
  std::size_t feature_dim = 16;
  std::string out;
};

int run_train(const TrainOpts& o, ManifestInfo info) {
  const PoseDataset clean = load_poses(o.poses);

  std::vector<TrainingPair> pairs;
  if (o.mode == "nrdf") {
    if (o.pairs.empty()) throw CLI::ValidationError("--pairs", "required for --mode nrdf");
    std::size_t pairs_k = 0;
    pairs = load_pairs(o.pairs, &pairs_k);
    if (pairs_k != clean.k)
      throw DimensionMismatch("train: pairs and poses disagree on joint count");
  } else if (o.mode != "fmdis") {
    throw CLI::ValidationError("--mode", "expected nrdf or fmdis");
  }

  ModelArchitecture arch;
  arch.k = clean.k;
  arch.feature_dim = o.feature_dim;
  arch.parents = chain_parents(clean.k);
  DistanceFieldModel model = model_init(arch, o.common.seed);

  TrainConfig cfg;
  cfg.lr = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch = o.batch;
  cfg.stage2_frac = o.stage2_frac;
  cfg.loss = o.loss == "mse" ? LossKind::kMse : LossKind::kMae;
  if (o.loss != "mae" && o.loss != "mse")
    throw CLI::ValidationError("--loss", "expected mae or mse");
  cfg.mode = o.mode == "fmdis" ? TrainMode::kFmDis : TrainMode::kNrdf;
  cfg.metric = parse_metric(o.metric);
  cfg.fm_samples_per_epoch = o.fm_samples;
  cfg.seed = o.common.seed;
  cfg.threads = o.common.effective_threads();

  const TrainResult result = train(model, clean, pairs, cfg);
  save_model(o.out, model);
  const std::string loss_path = o.out + ".loss.csv";
  save_loss_curve(loss_path, result);

  info.inputs = {o.poses};
  if (!o.pairs.empty()) info.inputs.push_back(o.pairs);
  info.outputs = {o.out, loss_path};
  write_manifest(o.out, info);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ProjectOpts {
  CommonOpts common;
  std::string model;
  std::string poses;
  std::string baseline = "rdfgrad";
  double alpha = 1.0;
  double tol = 1e-5;
  double lr = 0.01;
  std::size_t max_iters = 200;
  std::string out;
  std::string out_poses;
};

int run_project(const ProjectOpts& o, ManifestInfo info) {
  const DistanceFieldModel model = load_model(o.model);
  const PoseDataset starts = load_poses(o.poses);
  if (starts.k != model.arch.k)
    throw DimensionMismatch("project: poses and model disagree on joint count");
  const ModelField field(model);

  if (o.baseline != "rdfgrad" && o.baseline != "euclid")
    throw CLI::ValidationError("--baseline", "expected rdfgrad or euclid");

  std::vector<ProjectionResult> results(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (o.baseline == "euclid") {
      EuclideanConfig cfg;
      cfg.lr = o.lr;
      cfg.tol = o.tol;
      cfg.max_iters = o.max_iters;
      results[i] = project_euclidean(field, starts.poses[i], cfg);
    } else {
      ProjectionConfig cfg;
      cfg.alpha = o.alpha;
      cfg.tol = o.tol;
      cfg.max_iters = o.max_iters;
      results[i] = project(field, starts.poses[i], cfg);
    }
  }

  std::ofstream out = open_csv(o.out);
  out << "index,baseline,iterations,converged,f_initial,f_final\n";
  bool all_converged = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    out << i << ',' << o.baseline << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ','
        << fp17(r.f_initial) << ',' << fp17(r.f_final) << '\n';
    all_converged = all_converged && r.converged;
  }
  finish_csv(out, o.out);

  info.inputs = {o.model, o.poses};
  info.outputs = {o.out};
  if (!o.out_poses.empty()) {
    PoseDataset projected;
    projected.k = starts.k;
    for (const auto& r : results) projected.poses.push_back(r.pose);
    save_poses(o.out_poses, projected);
    info.outputs.push_back(o.out_poses);
  }
  write_manifest(o.out, info);

  if (!all_converged) {
    std::cerr << "project: some starts did not converge within " << o.max_iters
              << " iterations\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GenerateOpts {
  CommonOpts common;
  std::string model;
  std::string poses;
  std::size_t n = 100;
  std::string dist = "halfgauss:0.7853981633974483";
  bool ambient_seeds = false;
  double alpha = 1.0;
  double tol = 1e-5;
  std::size_t max_iters = 200;
  std::string out;
};

int run_generate(const GenerateOpts& o, ManifestInfo info) {
  const DistanceFieldModel model = load_model(o.model);
  const PoseDataset ds = load_poses(o.poses);
  if (ds.k != model.arch.k)
    throw DimensionMismatch("generate: poses and model disagree on joint count");
  const ModelField field(model);

  GenerateConfig cfg;
  cfg.n = o.n;
  cfg.sampler.dist = parse_dist_flag(o.dist);
  cfg.ambient_seeds = o.ambient_seeds;
  cfg.projection.alpha = o.alpha;
  cfg.projection.tol = o.tol;
  cfg.projection.max_iters = o.max_iters;
  cfg.threads = o.common.effective_threads();

  const GeneratedSet got = generate_diverse(field, ds, cfg, Rng(o.common.seed));

  PoseDataset outset;
  outset.k = ds.k;
  outset.poses = got.poses;
  save_poses(o.out, outset);

  const std::string stats_path = o.out + ".stats.csv";
  std::ofstream stats = open_csv(stats_path);
  stats << "index,iterations,converged,f_initial,f_final\n";
  bool all_converged = true;
  for (std::size_t i = 0; i < got.poses.size(); ++i) {
    stats << i << ',' << got.iterations[i] << ',' << int(got.converged[i]) << ','
          << fp17(got.f_initial[i]) << ',' << fp17(got.f_final[i]) << '\n';
    all_converged = all_converged && got.converged[i] != 0;
  }
  finish_csv(stats, stats_path);

  info.inputs = {o.model, o.poses};
  info.outputs = {o.out, stats_path};
  write_manifest(o.out, info);

  if (!all_converged) {
    std::cerr << "generate: some seeds did not converge within " << o.max_iters
              << " iterations\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct IkOpts {
  CommonOpts common;
  std::string model;
  std::string poses;
  std::size_t n = 20;
  std::string occlude;
  double lambda_pose = 5.0;
  std::string init_dist = "dirac:0.5";
  double bone_length = 1.0;
  double mpjpe_tol = 0.03;
  double step = 5e-3;
  std::size_t max_iters = 1000;
  std::string out;
};

std::vector<std::size_t> parse_occlusion(const std::string& text, std::size_t k) {
  std::vector<std::size_t> occluded;
  if (text.empty()) return occluded;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    const long idx = parse_long(token, "occlusion index");
    if (idx < 0 || static_cast<std::size_t>(idx) >= k)
      throw DimensionMismatch("ik: occluded joint index out of range");
    occluded.push_back(static_cast<std::size_t>(idx));
  }
  return occluded;
}

int run_ik(const IkOpts& o, ManifestInfo info) {
  const DistanceFieldModel model = load_model(o.model);
  const PoseDataset ds = load_poses(o.poses);
  if (ds.k != model.arch.k)
    throw DimensionMismatch("ik: poses and model disagree on joint count");
  if (ds.poses.empty()) throw EmptyDataset("ik: pose file is empty");
  const ModelField prior(model);

  const std::vector<std::size_t> occluded = parse_occlusion(o.occlude, ds.k);
  std::vector<std::size_t> observed;
  for (std::size_t j = 0; j < ds.k; ++j) {
    bool hidden = false;
    for (std::size_t occ : occluded) hidden = hidden || occ == j;
    if (!hidden) observed.push_back(j);
  }
  if (observed.empty()) throw EmptyDataset("ik: every joint is occluded");

  const Skeleton skel = make_chain(ds.k, o.bone_length);
  SamplerConfig init_sampler;
  init_sampler.dist = parse_dist_flag(o.init_dist);

  IkConfig cfg;
  cfg.step = o.step;
  cfg.max_iters = o.max_iters;
  cfg.mpjpe_tol = o.mpjpe_tol;

  const Rng base(o.common.seed);
  std::ofstream out = open_csv(o.out);
  out << "index,gt_index,iterations,reached_tol,observed_error,prior_initial,prior_final\n";
  bool all_reached = true;
  for (std::size_t i = 0; i < o.n; ++i) {
    Rng rng = base.split(i);
    const std::size_t gt_index = rng.uniform_index(ds.poses.size());
    const Pose& gt = ds.poses[gt_index];
    const auto positions = forward_kinematics(skel, gt);

    IkProblem prob;
    prob.skeleton = skel;
    prob.observed = observed;
    for (std::size_t j : observed) prob.targets.push_back(positions[j]);
    prob.prior = &prior;
    prob.lambda_pose = o.lambda_pose;

    const Pose init = perturb_pose(gt, init_sampler, rng);
    const IkResult r = ik_solve(prob, init, cfg);
    out << i << ',' << gt_index << ',' << r.iterations << ',' << (r.reached_tol ? 1 : 0) << ','
        << fp17(r.observed_error) << ',' << fp17(r.prior_initial) << ','
        << fp17(r.prior_final) << '\n';
    all_reached = all_reached && r.reached_tol;
  }
  finish_csv(out, o.out);

  info.inputs = {o.model, o.poses};
  info.outputs = {o.out};
  write_manifest(o.out, info);

  if (!all_reached) {
    std::cerr << "ik: some problems missed the joint-error tolerance\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalOpts {
  CommonOpts common;
  std::string poses;
  std::string ref;
  std::string paired;
  std::string metric = "l2";
  double lambda_q = 0.5;
  double bone_length = 1.0;
  std::string out;
};

int run_eval(const EvalOpts& o, ManifestInfo info) {
  const PoseDataset ref = load_poses(o.ref);
  const PoseDataset eval_set = load_poses(o.poses);
  if (ref.k != eval_set.k)
    throw DimensionMismatch("eval: reference and eval sets disagree on joint count");

  const Skeleton skel = make_chain(ref.k, o.bone_length);
  const Metric metric = parse_metric(o.metric);

  std::vector<Pose> paired_poses;
  const std::vector<Pose>* paired = nullptr;
  if (!o.paired.empty()) {
    const PoseDataset gt = load_poses(o.paired);
    if (gt.k != ref.k) throw DimensionMismatch("eval: paired set joint count mismatch");
    paired_poses = gt.poses;
    paired = &paired_poses;
  }

  const MetricReport report = evaluate_set(skel, ref, eval_set.poses, metric, paired, o.lambda_q,
                                           o.common.effective_threads());

  json j;
  j["n_poses"] = eval_set.size();
  j["metric"] = o.metric;
  j["d_nn"] = {{"mean", report.d_nn.mean},
               {"median", report.d_nn.median},
               {"min", report.d_nn.min},
               {"max", report.d_nn.max}};
  j["apd_cm"] = report.apd_cm;
  j["fid"] = report.fid;
  j["has_pairwise"] = report.has_pairwise;
  if (report.has_pairwise) {
    j["m2m_cm"] = report.m2m_cm;
    j["dq_m2m"] = report.dq_m2m;
  }
  std::ofstream out(o.out);
  if (!out) throw IoError("cannot open for writing: " + o.out);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + o.out);

  info.inputs = {o.ref, o.poses};
  if (!o.paired.empty()) info.inputs.push_back(o.paired);
  info.outputs = {o.out};
  write_manifest(o.out, info);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distance fields on articulated pose manifolds"};
  app.require_subcommand(1);

  SynthOpts synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic pose dataset");
  synth_cmd->add_option("--k", synth.k, "joints");
  synth_cmd->add_option("--latent-dim", synth.latent_dim, "latent dimensions");
  synth_cmd->add_option("--n", synth.n, "number of poses");
  synth_cmd->add_option("--amplitude", synth.amplitude, "max joint angle, radians");
  synth_cmd->add_option("--out", synth.out, "output pose file")->required();
  add_common(synth_cmd, synth.common);

  SampleOpts sample;
  CLI::App* sample_cmd = app.add_subcommand("sample", "draw distance-labeled training pairs");
  sample_cmd->add_option("--poses", sample.poses, "input pose file")->required();
  sample_cmd->add_option("--dist", sample.dist,
                         "halfgauss:s | exp:r | uniform:a,b | dirac:h | posendf:s");
  sample_cmd->add_option("--n", sample.n, "number of pairs");
  sample_cmd->add_option("--metric", sample.metric, "l1 or l2");
  sample_cmd->add_option("--bins", sample.bins, "histogram bins");
  sample_cmd->add_option("--out", sample.out, "output pairs file")->required();
  sample_cmd->add_option("--hist", sample.hist, "histogram csv path (default <out>.hist.csv)");
  add_common(sample_cmd, sample.common);

  TrainOpts train_opts;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a distance field model");
  train_cmd->add_option("--pairs", train_opts.pairs, "training pairs file");
  train_cmd->add_option("--poses", train_opts.poses, "clean pose file")->required();
  train_cmd->add_option("--mode", train_opts.mode, "nrdf or fmdis");
  train_cmd->add_option("--loss", train_opts.loss, "mae or mse");
  train_cmd->add_option("--metric", train_opts.metric, "l1 or l2");
  train_cmd->add_option("--lr", train_opts.lr, "learning rate");
  train_cmd->add_option("--epochs", train_opts.epochs, "training epochs");
  train_cmd->add_option("--batch", train_opts.batch, "batch size");
  train_cmd->add_option("--stage2-frac", train_opts.stage2_frac,
                        "fraction of epochs spent on the fine-tune stage");
  train_cmd->add_option("--fm-samples", train_opts.fm_samples,
                        "interpolant samples per epoch in fmdis mode");
  train_cmd->add_option("--feature-dim", train_opts.feature_dim, "per-joint encoder width");
  train_cmd->add_option("--out", train_opts.out, "output checkpoint")->required();
  add_common(train_cmd, train_opts.common);

  ProjectOpts project_opts;
  CLI::App* project_cmd = app.add_subcommand("project", "project poses onto the zero level set");
  project_cmd->add_option("--model", project_opts.model, "checkpoint")->required();
  project_cmd->add_option("--poses", project_opts.poses, "poses to project")->required();
  project_cmd->add_option("--baseline", project_opts.baseline, "rdfgrad or euclid");
  project_cmd->add_option("--alpha", project_opts.alpha, "step scale");
  project_cmd->add_option("--tol", project_opts.tol, "stop when |f_prev - f| < tol");
  project_cmd->add_option("--lr", project_opts.lr, "euclid baseline learning rate");
  project_cmd->add_option("--max-iters", project_opts.max_iters, "iteration budget");
  project_cmd->add_option("--out", project_opts.out, "output csv")->required();
  project_cmd->add_option("--out-poses", project_opts.out_poses, "projected pose file");
  add_common(project_cmd, project_opts.common);

  GenerateOpts generate_opts;
  CLI::App* generate_cmd = app.add_subcommand("generate", "sample diverse poses from the field");
  generate_cmd->add_option("--model", generate_opts.model, "checkpoint")->required();
  generate_cmd->add_option("--poses", generate_opts.poses, "seed dataset")->required();
  generate_cmd->add_option("--n", generate_opts.n, "poses to generate");
  generate_cmd->add_option("--dist", generate_opts.dist, "seed perturbation distribution");
  generate_cmd->add_flag("--ambient-seeds", generate_opts.ambient_seeds,
                         "seed from ambient Gaussians instead of dataset perturbations");
  generate_cmd->add_option("--alpha", generate_opts.alpha, "projection step scale");
  generate_cmd->add_option("--tol", generate_opts.tol, "projection tolerance");
  generate_cmd->add_option("--max-iters", generate_opts.max_iters, "projection budget");
  generate_cmd->add_option("--out", generate_opts.out, "output pose file")->required();
  add_common(generate_cmd, generate_opts.common);

  IkOpts ik_opts;
  CLI::App* ik_cmd = app.add_subcommand("ik", "fit poses to joint observations");
  ik_cmd->add_option("--model", ik_opts.model, "prior checkpoint")->required();
  ik_cmd->add_option("--poses", ik_opts.poses, "ground-truth pose file")->required();
  ik_cmd->add_option("--n", ik_opts.n, "number of problems");
  ik_cmd->add_option("--occlude", ik_opts.occlude, "comma-separated hidden joints, empty = none");
  ik_cmd->add_option("--lambda-pose", ik_opts.lambda_pose, "prior weight");
  ik_cmd->add_option("--init-dist", ik_opts.init_dist, "init perturbation distribution");
  ik_cmd->add_option("--bone-length", ik_opts.bone_length, "chain bone length, meters");
  ik_cmd->add_option("--mpjpe-tol", ik_opts.mpjpe_tol, "mean joint error target, meters");
  ik_cmd->add_option("--step", ik_opts.step, "descent step");
  ik_cmd->add_option("--max-iters", ik_opts.max_iters, "descent budget");
  ik_cmd->add_option("--out", ik_opts.out, "output csv")->required();
  add_common(ik_cmd, ik_opts.common);

  EvalOpts eval_opts;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score a pose set against a reference");
  eval_cmd->add_option("--poses", eval_opts.poses, "pose set to score")->required();
  eval_cmd->add_option("--ref", eval_opts.ref, "reference dataset")->required();
  eval_cmd->add_option("--paired", eval_opts.paired, "paired ground truth for m2m metrics");
  eval_cmd->add_option("--metric", eval_opts.metric, "l1 or l2");
  eval_cmd->add_option("--lambda-q", eval_opts.lambda_q, "rotation weight in the mixed score");
  eval_cmd->add_option("--bone-length", eval_opts.bone_length, "chain bone length, meters");
  eval_cmd->add_option("--out", eval_opts.out, "output json report")->required();
  add_common(eval_cmd, eval_opts.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  ManifestInfo info;
  for (int i = 0; i < argc; ++i) info.argv.push_back(argv[i]);

  try {
    if (synth_cmd->parsed()) {
      info.command = "synth";
      info.seed = synth.common.seed;
      info.threads = synth.common.effective_threads();
      info.deterministic = synth.common.deterministic;
      return run_synth(synth, std::move(info));
    }
    if (sample_cmd->parsed()) {
      info.command = "sample";
      info.seed = sample.common.seed;
      info.threads = sample.common.effective_threads();
      info.deterministic = sample.common.deterministic;
      return run_sample(sample, std::move(info));
    }
    if (train_cmd->parsed()) {
      info.command = "train";
      info.seed = train_opts.common.seed;
      info.threads = train_opts.common.effective_threads();
      info.deterministic = train_opts.common.deterministic;
      return run_train(train_opts, std::move(info));
    }
    if (project_cmd->parsed()) {
      info.command = "project";
      info.seed = project_opts.common.seed;
      info.threads = project_opts.common.effective_threads();
      info.deterministic = project_opts.common.deterministic;
      return run_project(project_opts, std::move(info));
    }
    if (generate_cmd->parsed()) {
      info.command = "generate";
      info.seed = generate_opts.common.seed;
      info.threads = generate_opts.common.effective_threads();
      info.deterministic = generate_opts.common.deterministic;
      return run_generate(generate_opts, std::move(info));
    }
    if (ik_cmd->parsed()) {
      info.command = "ik";
      info.seed = ik_opts.common.seed;
      info.threads = ik_opts.common.effective_threads();
      info.deterministic = ik_opts.common.deterministic;
      return run_ik(ik_opts, std::move(info));
    }
    if (eval_cmd->parsed()) {
      info.command = "eval";
      info.seed = eval_opts.common.seed;
      info.threads = eval_opts.common.effective_threads();
      info.deterministic = eval_opts.common.deterministic;
      return run_eval(eval_opts, std::move(info));
    }
  } catch (const CLI::Error& e) {
    std::cerr << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const MalformedFile& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const MalformedCheckpoint& e) {
    std::cerr << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
