#include "nrdf/netfield.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "nrdf/errors.hpp"
#include "nrdf/sampling.hpp"
#include "nrdf/textio.hpp"

namespace nrdf {

namespace {

double leaky(double x, double slope) { return x >= 0.0 ? x : slope * x; }
double leaky_grad(double x, double slope) { return x >= 0.0 ? 1.0 : slope; }

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// y = W x + b
void affine(const Mat& w, const std::vector<double>& b, const std::vector<double>& x,
            std::vector<double>& y) {
  y.resize(w.rows);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = &w.a[r * w.cols];
    double acc = b[r];
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

// gw += delta x^T, gb += delta, gx = W^T delta
void affine_backward(const Mat& w, const std::vector<double>& x, const std::vector<double>& delta,
                     Mat& gw, std::vector<double>& gb, std::vector<double>* gx) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double d = delta[r];
    double* grow = &gw.a[r * w.cols];
    for (std::size_t c = 0; c < w.cols; ++c) grow[c] += d * x[c];
    gb[r] += d;
  }
  if (gx) {
    gx->assign(w.cols, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) {
      const double d = delta[r];
      const double* row = &w.a[r * w.cols];
      for (std::size_t c = 0; c < w.cols; ++c) (*gx)[c] += row[c] * d;
    }
  }
}

std::vector<std::size_t> decoder_layer_sizes(const ModelArchitecture& arch) {
  std::vector<std::size_t> sizes;
  sizes.push_back(arch.decoder_input());
  for (auto h : arch.decoder_hidden) sizes.push_back(h);
  sizes.push_back(1);
  return sizes;
}

}  // namespace

void ModelArchitecture::validate() const {
  if (k == 0) throw ArchitectureMismatch("architecture: k must be positive");
  if (leaky_slope <= 0 || leaky_slope >= 1)
    throw ArchitectureMismatch("architecture: leaky slope outside (0, 1)");
  if (hierarchical) {
    if (feature_dim == 0) throw ArchitectureMismatch("architecture: feature_dim must be positive");
    if (parents.size() != k) throw ArchitectureMismatch("architecture: parents size != k");
    for (std::size_t j = 0; j < k; ++j) {
      if (parents[j] >= static_cast<std::int64_t>(j) || parents[j] < -1)
        throw ArchitectureMismatch("architecture: parent index must be -1 or less than the joint");
    }
  }
  for (auto h : decoder_hidden)
    if (h == 0) throw ArchitectureMismatch("architecture: zero-width decoder layer");
}

std::vector<std::int64_t> chain_parents(std::size_t k) {
  std::vector<std::int64_t> p(k);
  for (std::size_t j = 0; j < k; ++j) p[j] = static_cast<std::int64_t>(j) - 1;
  return p;
}

std::size_t DistanceFieldModel::param_count() const {
  std::size_t n = 0;
  for (const auto& w : enc_w) n += w.a.size();
  for (const auto& b : enc_b) n += b.size();
  for (const auto& w : dec_w) n += w.a.size();
  for (const auto& b : dec_b) n += b.size();
  return n;
}

DistanceFieldModel model_init(const ModelArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  DistanceFieldModel m;
  m.arch = arch;
  Rng rng = Rng(seed).split(0x11117);
  auto fill = [&](Mat& w, std::size_t rows, std::size_t cols) {
    w.resize(rows, cols);
    const double s = std::sqrt(1.0 / static_cast<double>(cols));
    for (auto& v : w.a) v = rng.uniform(-s, s);
  };
  if (arch.hierarchical) {
    m.enc_w.resize(arch.k);
    m.enc_b.resize(arch.k);
    for (std::size_t j = 0; j < arch.k; ++j) {
      fill(m.enc_w[j], arch.feature_dim, 4 + arch.feature_dim);
      m.enc_b[j].assign(arch.feature_dim, 0.0);
    }
  }
  const auto sizes = decoder_layer_sizes(arch);
  m.dec_w.resize(sizes.size() - 1);
  m.dec_b.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    fill(m.dec_w[l], sizes[l + 1], sizes[l]);
    m.dec_b[l].assign(sizes[l + 1], 0.0);
  }
  return m;
}

void ModelGrads::init_like(const DistanceFieldModel& model) {
  enc_w.resize(model.enc_w.size());
  enc_b.resize(model.enc_b.size());
  for (std::size_t j = 0; j < model.enc_w.size(); ++j) {
    enc_w[j].resize(model.enc_w[j].rows, model.enc_w[j].cols);
    enc_b[j].assign(model.enc_b[j].size(), 0.0);
  }
  dec_w.resize(model.dec_w.size());
  dec_b.resize(model.dec_b.size());
  for (std::size_t l = 0; l < model.dec_w.size(); ++l) {
    dec_w[l].resize(model.dec_w[l].rows, model.dec_w[l].cols);
    dec_b[l].assign(model.dec_b[l].size(), 0.0);
  }
}

void ModelGrads::zero() {
  for (auto& w : enc_w) std::fill(w.a.begin(), w.a.end(), 0.0);
  for (auto& b : enc_b) std::fill(b.begin(), b.end(), 0.0);
  for (auto& w : dec_w) std::fill(w.a.begin(), w.a.end(), 0.0);
  for (auto& b : dec_b) std::fill(b.begin(), b.end(), 0.0);
}

double forward(const DistanceFieldModel& model, const Pose& pose, ModelWorkspace& ws) {
  const auto& arch = model.arch;
  if (pose.size() != arch.k) throw DimensionMismatch("forward: pose joint count != model k");

  ws.input.resize(4 * arch.k);
  for (std::size_t j = 0; j < arch.k; ++j) {
    const Quat q = quat_canonical(pose[j]);
    ws.input[4 * j] = q.w;
    ws.input[4 * j + 1] = q.x;
    ws.input[4 * j + 2] = q.y;
    ws.input[4 * j + 3] = q.z;
  }

  const std::size_t layers = model.dec_w.size();
  ws.dec_pre.resize(layers);
  ws.dec_act.resize(layers + 1);

  if (arch.hierarchical) {
    const std::size_t fdim = arch.feature_dim;
    ws.enc_in.resize(arch.k);
    ws.enc_pre.resize(arch.k);
    ws.feat.resize(arch.k);
    for (std::size_t j = 0; j < arch.k; ++j) {
      auto& in = ws.enc_in[j];
      in.assign(4 + fdim, 0.0);
      for (int c = 0; c < 4; ++c) in[static_cast<std::size_t>(c)] = ws.input[4 * j + c];
      const std::int64_t par = arch.parents[j];
      if (par >= 0) {
        const auto& pf = ws.feat[static_cast<std::size_t>(par)];
        std::copy(pf.begin(), pf.end(), in.begin() + 4);
      }
      affine(model.enc_w[j], model.enc_b[j], in, ws.enc_pre[j]);
      auto& fj = ws.feat[j];
      fj.resize(fdim);
      for (std::size_t c = 0; c < fdim; ++c) fj[c] = leaky(ws.enc_pre[j][c], arch.leaky_slope);
    }
    auto& dec_in = ws.dec_act[0];
    dec_in.resize(arch.k * fdim);
    for (std::size_t j = 0; j < arch.k; ++j)
      std::copy(ws.feat[j].begin(), ws.feat[j].end(), dec_in.begin() + j * fdim);
  } else {
    ws.dec_act[0] = ws.input;
  }

  for (std::size_t l = 0; l < layers; ++l) {
    affine(model.dec_w[l], model.dec_b[l], ws.dec_act[l], ws.dec_pre[l]);
    if (l + 1 < layers) {
      auto& act = ws.dec_act[l + 1];
      act.resize(ws.dec_pre[l].size());
      for (std::size_t c = 0; c < act.size(); ++c)
        act[c] = leaky(ws.dec_pre[l][c], arch.leaky_slope);
    }
  }
  ws.z = ws.dec_pre[layers - 1][0];
  ws.f = softplus(ws.z);
  return ws.f;
}

double forward(const DistanceFieldModel& model, const Pose& pose) {
  ModelWorkspace ws;
  return forward(model, pose, ws);
}

namespace {

// shared decoder backward; fills ws.dec_delta and returns the gradient at the
// decoder input inside ws.dec_delta[0]'s companion buffer
void decoder_backward(const DistanceFieldModel& model, ModelWorkspace& ws, double dloss_df,
                      ModelGrads* grads, std::vector<double>& dec_in_grad) {
  const auto& arch = model.arch;
  const std::size_t layers = model.dec_w.size();
  ws.dec_delta.resize(layers);

  const double dz = dloss_df * sigmoid(ws.z);
  ws.dec_delta[layers - 1].assign(1, dz);

  for (std::size_t l = layers; l-- > 0;) {
    std::vector<double>* gx = nullptr;
    std::vector<double> local;
    if (l > 0) {
      gx = &local;
    } else {
      gx = &dec_in_grad;
    }
    if (grads) {
      affine_backward(model.dec_w[l], ws.dec_act[l], ws.dec_delta[l], grads->dec_w[l],
                      grads->dec_b[l], gx);
    } else {
      // input-only path still needs W^T delta
      gx->assign(model.dec_w[l].cols, 0.0);
      for (std::size_t r = 0; r < model.dec_w[l].rows; ++r) {
        const double d = ws.dec_delta[l][r];
        const double* row = &model.dec_w[l].a[r * model.dec_w[l].cols];
        for (std::size_t c = 0; c < model.dec_w[l].cols; ++c) (*gx)[c] += row[c] * d;
      }
    }
    if (l > 0) {
      auto& delta = ws.dec_delta[l - 1];
      delta.resize(local.size());
      for (std::size_t c = 0; c < local.size(); ++c)
        delta[c] = local[c] * leaky_grad(ws.dec_pre[l - 1][c], arch.leaky_slope);
    }
  }
}

// encoder backward from the decoder-input gradient; returns the 4K input
// gradient when input_grad is non-null
void encoder_backward(const DistanceFieldModel& model, ModelWorkspace& ws,
                      const std::vector<double>& dec_in_grad, ModelGrads* grads,
                      std::vector<double>* input_grad) {
  const auto& arch = model.arch;
  const std::size_t fdim = arch.feature_dim;
  ws.feat_grad.resize(arch.k);
  ws.enc_pre_grad.resize(arch.k);
  for (std::size_t j = 0; j < arch.k; ++j) {
    ws.feat_grad[j].assign(fdim, 0.0);
    for (std::size_t c = 0; c < fdim; ++c) ws.feat_grad[j][c] = dec_in_grad[j * fdim + c];
  }
  if (input_grad) input_grad->assign(4 * arch.k, 0.0);

  for (std::size_t j = arch.k; j-- > 0;) {
    auto& dpre = ws.enc_pre_grad[j];
    dpre.resize(fdim);
    for (std::size_t c = 0; c < fdim; ++c)
      dpre[c] = ws.feat_grad[j][c] * leaky_grad(ws.enc_pre[j][c], arch.leaky_slope);

    std::vector<double> gin;
    if (grads) {
      affine_backward(model.enc_w[j], ws.enc_in[j], dpre, grads->enc_w[j], grads->enc_b[j], &gin);
    } else {
      gin.assign(model.enc_w[j].cols, 0.0);
      for (std::size_t r = 0; r < model.enc_w[j].rows; ++r) {
        const double d = dpre[r];
        const double* row = &model.enc_w[j].a[r * model.enc_w[j].cols];
        for (std::size_t c = 0; c < model.enc_w[j].cols; ++c) gin[c] += row[c] * d;
      }
    }
    if (input_grad) {
      for (int c = 0; c < 4; ++c)
        (*input_grad)[4 * j + static_cast<std::size_t>(c)] = gin[static_cast<std::size_t>(c)];
    }
    const std::int64_t par = arch.parents[j];
    if (par >= 0) {
      auto& pg = ws.feat_grad[static_cast<std::size_t>(par)];
      for (std::size_t c = 0; c < fdim; ++c) pg[c] += gin[4 + c];
    }
  }
}

}  // namespace

void backward_params(const DistanceFieldModel& model, ModelWorkspace& ws, double dloss_df,
                     ModelGrads& grads) {
  std::vector<double> dec_in_grad;
  decoder_backward(model, ws, dloss_df, &grads, dec_in_grad);
  if (model.arch.hierarchical) {
    encoder_backward(model, ws, dec_in_grad, &grads, nullptr);
  }
}

std::vector<double> backward_input(const DistanceFieldModel& model, ModelWorkspace& ws) {
  std::vector<double> dec_in_grad;
  decoder_backward(model, ws, 1.0, nullptr, dec_in_grad);
  if (!model.arch.hierarchical) return dec_in_grad;
  std::vector<double> input_grad;
  encoder_backward(model, ws, dec_in_grad, nullptr, &input_grad);
  return input_grad;
}

std::vector<double> input_gradient(const DistanceFieldModel& model, const Pose& pose,
                                   double* value_out) {
  ModelWorkspace ws;
  const double f = forward(model, pose, ws);
  if (value_out) *value_out = f;
  return backward_input(model, ws);
}

double batch_loss_and_grad(const DistanceFieldModel& model, const std::vector<BatchSample>& batch,
                           LossKind loss, ModelWorkspace& ws, ModelGrads& grads) {
  if (batch.empty()) throw EmptyDataset("batch_loss_and_grad: empty batch");
  grads.zero();
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const auto& sample : batch) {
    const double f = forward(model, *sample.pose, ws);
    const double r = f - sample.target;
    double dloss_df;
    if (loss == LossKind::kMae) {
      total += std::abs(r);
      dloss_df = (r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0)) * inv_n;
    } else {
      total += r * r;
      dloss_df = 2.0 * r * inv_n;
    }
    if (dloss_df != 0.0) backward_params(model, ws, dloss_df, grads);
  }
  return total * inv_n;
}

namespace {

struct Adam {
  ModelGrads m, v;
  std::size_t t = 0;

  void init(const DistanceFieldModel& model) {
    m.init_like(model);
    v.init_like(model);
  }

  void step(DistanceFieldModel& model, const ModelGrads& g, const TrainConfig& cfg) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    auto upd = [&](std::vector<double>& w, std::vector<double>& mm, std::vector<double>& vv,
                   const std::vector<double>& gg) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        mm[i] = cfg.beta1 * mm[i] + (1.0 - cfg.beta1) * gg[i];
        vv[i] = cfg.beta2 * vv[i] + (1.0 - cfg.beta2) * gg[i] * gg[i];
        const double mhat = mm[i] / bc1;
        const double vhat = vv[i] / bc2;
        w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
      }
    };
    for (std::size_t j = 0; j < model.enc_w.size(); ++j) {
      upd(model.enc_w[j].a, m.enc_w[j].a, v.enc_w[j].a, g.enc_w[j].a);
      upd(model.enc_b[j], m.enc_b[j], v.enc_b[j], g.enc_b[j]);
    }
    for (std::size_t l = 0; l < model.dec_w.size(); ++l) {
      upd(model.dec_w[l].a, m.dec_w[l].a, v.dec_w[l].a, g.dec_w[l].a);
      upd(model.dec_b[l], m.dec_b[l], v.dec_b[l], g.dec_b[l]);
    }
  }
};

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

TrainResult train(DistanceFieldModel& model, const PoseDataset& clean,
                  const std::vector<TrainingPair>& pairs, const TrainConfig& cfg) {
  model.arch.validate();
  if (clean.poses.empty()) throw EmptyDataset("train: empty clean dataset");
  if (clean.k != model.arch.k) throw DimensionMismatch("train: dataset k != model k");
  if (cfg.mode == TrainMode::kNrdf && pairs.empty())
    throw EmptyDataset("train: nrdf mode needs training pairs");
  if (cfg.batch < 2) throw DimensionMismatch("train: batch must be at least 2");

  Rng rng(cfg.seed);
  Rng shuffle_rng = rng.split(1);
  Rng clean_rng = rng.split(2);
  Rng stage2_rng = rng.split(3);
  Rng fm_rng = rng.split(4);

  Adam adam;
  adam.init(model);
  ModelGrads grads;
  grads.init_like(model);
  ModelWorkspace ws;

  TrainResult result;
  auto run_epoch_mean = [&](double total, std::size_t count) {
    return count ? total / static_cast<double>(count) : 0.0;
  };
  auto check_finite = [&](double loss) {
    if (!std::isfinite(loss)) throw DivergedTraining("train: non-finite loss");
  };

  if (cfg.mode == TrainMode::kFmDis) {
    const std::size_t per_epoch = std::max<std::size_t>(cfg.fm_samples_per_epoch, cfg.batch);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
      double total = 0.0;
      std::size_t seen = 0;
      std::vector<FmPair> fm(cfg.batch);
      std::vector<BatchSample> batch(cfg.batch);
      for (std::size_t done = 0; done < per_epoch; done += cfg.batch) {
        const std::size_t bsz = std::min(cfg.batch, per_epoch - done);
        for (std::size_t b = 0; b < bsz; ++b) {
          const auto& seed_pose = clean.poses[fm_rng.uniform_index(clean.poses.size())];
          fm[b] = sample_fm_pair(seed_pose, cfg.metric, fm_rng);
          batch[b] = BatchSample{&fm[b].pose_t, fm[b].target};
        }
        std::vector<BatchSample> view(batch.begin(), batch.begin() + static_cast<std::ptrdiff_t>(bsz));
        const double loss = batch_loss_and_grad(model, view, cfg.loss, ws, grads);
        check_finite(loss);
        adam.step(model, grads, cfg);
        total += loss * static_cast<double>(bsz);
        seen += bsz;
      }
      result.curve.push_back(LossRow{epoch, 1, run_epoch_mean(total, seen)});
      if (cfg.verbose)
        std::fprintf(stderr, "epoch %zu stage 1 loss %.6f\n", epoch, result.curve.back().mean_loss);
    }
    return result;
  }

  const std::size_t stage2_epochs =
      std::min(cfg.epochs, static_cast<std::size_t>(
                               std::llround(cfg.stage2_frac * static_cast<double>(cfg.epochs))));
  const std::size_t stage1_epochs = cfg.epochs - stage2_epochs;
  const std::size_t half = cfg.batch / 2;

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= stage1_epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    double total = 0.0;
    std::size_t seen = 0;
    std::vector<BatchSample> batch;
    for (std::size_t start = 0; start < order.size(); start += half) {
      const std::size_t n_noisy = std::min(half, order.size() - start);
      batch.clear();
      for (std::size_t b = 0; b < n_noisy; ++b) {
        const auto& pr = pairs[order[start + b]];
        batch.push_back(BatchSample{&pr.query, pr.distance});
      }
      for (std::size_t b = 0; b < n_noisy; ++b) {
        const auto& pose = clean.poses[clean_rng.uniform_index(clean.poses.size())];
        batch.push_back(BatchSample{&pose, 0.0});
      }
      const double loss = batch_loss_and_grad(model, batch, cfg.loss, ws, grads);
      check_finite(loss);
      adam.step(model, grads, cfg);
      total += loss * static_cast<double>(batch.size());
      seen += batch.size();
    }
    result.curve.push_back(LossRow{epoch, 1, run_epoch_mean(total, seen)});
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %zu stage 1 loss %.6f\n", epoch, result.curve.back().mean_loss);
  }

  if (stage2_epochs > 0) {
    const std::size_t n2 = pairs.size();
    std::vector<Pose> tune_poses(n2);
    std::vector<double> tune_targets(n2);
    for (std::size_t i = 0; i < n2; ++i) {
      tune_poses[i] = ambient_gaussian_pose(clean.k, stage2_rng);
      tune_targets[i] = nn_exact(clean, tune_poses[i], cfg.metric).second;
    }
    std::vector<std::size_t> order2(n2);
    for (std::size_t i = 0; i < n2; ++i) order2[i] = i;

    for (std::size_t epoch = stage1_epochs + 1; epoch <= cfg.epochs; ++epoch) {
      shuffle_indices(order2, shuffle_rng);
      double total = 0.0;
      std::size_t seen = 0;
      std::vector<BatchSample> batch;
      for (std::size_t start = 0; start < n2; start += cfg.batch) {
        const std::size_t bsz = std::min(cfg.batch, n2 - start);
        batch.clear();
        for (std::size_t b = 0; b < bsz; ++b) {
          const std::size_t i = order2[start + b];
          batch.push_back(BatchSample{&tune_poses[i], tune_targets[i]});
        }
        const double loss = batch_loss_and_grad(model, batch, cfg.loss, ws, grads);
        check_finite(loss);
        adam.step(model, grads, cfg);
        total += loss * static_cast<double>(bsz);
        seen += bsz;
      }
      result.curve.push_back(LossRow{epoch, 2, run_epoch_mean(total, seen)});
      if (cfg.verbose)
        std::fprintf(stderr, "epoch %zu stage 2 loss %.6f\n", epoch, result.curve.back().mean_loss);
    }
  }
  return result;
}

void save_model(const std::string& path, const DistanceFieldModel& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  const auto& arch = model.arch;
  out << "NRDF-MODEL v1\n";
  out << "k " << arch.k << '\n';
  out << "hierarchical " << (arch.hierarchical ? 1 : 0) << '\n';
  out << "feature_dim " << arch.feature_dim << '\n';
  out << "leaky_slope " << fp17(arch.leaky_slope) << '\n';
  out << "parents";
  for (auto p : arch.parents) out << ' ' << p;
  out << '\n';
  out << "decoder_hidden";
  for (auto h : arch.decoder_hidden) out << ' ' << h;
  out << '\n';

  auto dump = [&](const std::string& name, const Mat& w) {
    out << "tensor " << name << ' ' << w.rows << ' ' << w.cols << '\n';
    for (std::size_t r = 0; r < w.rows; ++r) {
      for (std::size_t c = 0; c < w.cols; ++c) {
        if (c) out << ' ';
        out << fp17(w.at(r, c));
      }
      out << '\n';
    }
  };
  auto dump_vec = [&](const std::string& name, const std::vector<double>& b) {
    out << "tensor " << name << " 1 " << b.size() << '\n';
    for (std::size_t c = 0; c < b.size(); ++c) {
      if (c) out << ' ';
      out << fp17(b[c]);
    }
    out << '\n';
  };
  for (std::size_t j = 0; j < model.enc_w.size(); ++j) {
    dump("enc." + std::to_string(j) + ".w", model.enc_w[j]);
    dump_vec("enc." + std::to_string(j) + ".b", model.enc_b[j]);
  }
  for (std::size_t l = 0; l < model.dec_w.size(); ++l) {
    dump("dec." + std::to_string(l) + ".w", model.dec_w[l]);
    dump_vec("dec." + std::to_string(l) + ".b", model.dec_b[l]);
  }
  out << "end\n";
  if (!out) throw IoError("write failed: " + path);
}

DistanceFieldModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "NRDF-MODEL v1")
    throw MalformedCheckpoint("unknown checkpoint version or header: " + line);

  ModelArchitecture arch;
  arch.parents.clear();
  arch.decoder_hidden.clear();
  bool saw_tensor = false;
  std::string pending;

  auto next_line = [&](std::string& dst) -> bool {
    if (!pending.empty()) {
      dst = pending;
      pending.clear();
      return true;
    }
    return static_cast<bool>(std::getline(in, dst));
  };

  while (next_line(line)) {
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields[0] == "tensor") {
      pending = line;
      saw_tensor = true;
      break;
    }
    if (fields[0] == "k" && fields.size() == 2) {
      arch.k = static_cast<std::size_t>(parse_long(fields[1], "checkpoint k"));
    } else if (fields[0] == "hierarchical" && fields.size() == 2) {
      arch.hierarchical = parse_long(fields[1], "checkpoint hierarchical") != 0;
    } else if (fields[0] == "feature_dim" && fields.size() == 2) {
      arch.feature_dim = static_cast<std::size_t>(parse_long(fields[1], "checkpoint feature_dim"));
    } else if (fields[0] == "leaky_slope" && fields.size() == 2) {
      arch.leaky_slope = parse_double(fields[1], "checkpoint leaky_slope");
    } else if (fields[0] == "parents") {
      for (std::size_t i = 1; i < fields.size(); ++i)
        arch.parents.push_back(parse_long(fields[i], "checkpoint parents"));
    } else if (fields[0] == "decoder_hidden") {
      for (std::size_t i = 1; i < fields.size(); ++i)
        arch.decoder_hidden.push_back(
            static_cast<std::size_t>(parse_long(fields[i], "checkpoint decoder_hidden")));
    } else {
      throw MalformedCheckpoint("unknown checkpoint field: " + fields[0]);
    }
  }
  if (!saw_tensor) throw MalformedCheckpoint("checkpoint has no tensors: " + path);
  arch.validate();

  DistanceFieldModel m;
  m.arch = arch;
  if (arch.hierarchical) {
    m.enc_w.resize(arch.k);
    m.enc_b.resize(arch.k);
  }
  const auto sizes = decoder_layer_sizes(arch);
  m.dec_w.resize(sizes.size() - 1);
  m.dec_b.resize(sizes.size() - 1);

  auto read_tensor = [&](const std::string& header) {
    const auto fields = split_ws(header);
    if (fields.size() != 4) throw MalformedCheckpoint("bad tensor header: " + header);
    const std::string& name = fields[1];
    const long rows = parse_long(fields[2], "tensor rows");
    const long cols = parse_long(fields[3], "tensor cols");
    if (rows <= 0 || cols <= 0) throw MalformedCheckpoint("bad tensor shape: " + header);

    Mat w;
    w.resize(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    for (long r = 0; r < rows; ++r) {
      std::string row;
      if (!std::getline(in, row)) throw MalformedCheckpoint("truncated tensor: " + name);
      const auto vals = split_ws(row);
      if (vals.size() != static_cast<std::size_t>(cols))
        throw MalformedCheckpoint("tensor row width mismatch: " + name);
      for (long c = 0; c < cols; ++c)
        w.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
            parse_double(vals[static_cast<std::size_t>(c)], "tensor value");
    }

    auto expect = [&](std::size_t er, std::size_t ec) {
      if (w.rows != er || w.cols != ec)
        throw ArchitectureMismatch("tensor " + name + " has shape " + std::to_string(w.rows) +
                                   "x" + std::to_string(w.cols) + ", expected " +
                                   std::to_string(er) + "x" + std::to_string(ec));
    };

    if (name.rfind("enc.", 0) == 0) {
      if (!arch.hierarchical) throw ArchitectureMismatch("encoder tensor in a flat checkpoint");
      const auto dot = name.find('.', 4);
      if (dot == std::string::npos) throw MalformedCheckpoint("bad tensor name: " + name);
      const long j = parse_long(name.substr(4, dot - 4), "encoder index");
      if (j < 0 || static_cast<std::size_t>(j) >= arch.k)
        throw ArchitectureMismatch("encoder index out of range: " + name);
      const std::string kind = name.substr(dot + 1);
      if (kind == "w") {
        expect(arch.feature_dim, 4 + arch.feature_dim);
        m.enc_w[static_cast<std::size_t>(j)] = std::move(w);
      } else if (kind == "b") {
        expect(1, arch.feature_dim);
        m.enc_b[static_cast<std::size_t>(j)] = std::move(w.a);
      } else {
        throw MalformedCheckpoint("bad tensor name: " + name);
      }
    } else if (name.rfind("dec.", 0) == 0) {
      const auto dot = name.find('.', 4);
      if (dot == std::string::npos) throw MalformedCheckpoint("bad tensor name: " + name);
      const long l = parse_long(name.substr(4, dot - 4), "decoder index");
      if (l < 0 || static_cast<std::size_t>(l) + 1 >= sizes.size())
        throw ArchitectureMismatch("decoder index out of range: " + name);
      const std::string kind = name.substr(dot + 1);
      const std::size_t li = static_cast<std::size_t>(l);
      if (kind == "w") {
        expect(sizes[li + 1], sizes[li]);
        m.dec_w[li] = std::move(w);
      } else if (kind == "b") {
        expect(1, sizes[li + 1]);
        m.dec_b[li] = std::move(w.a);
      } else {
        throw MalformedCheckpoint("bad tensor name: " + name);
      }
    } else {
      throw MalformedCheckpoint("unknown tensor: " + name);
    }
  };

  bool saw_end = false;
  std::string header = pending;
  pending.clear();
  for (;;) {
    if (header.empty()) {
      if (!std::getline(in, header)) break;
    }
    const auto fields = split_ws(header);
    if (fields.empty()) {
      header.clear();
      continue;
    }
    if (fields[0] == "end") {
      saw_end = true;
      break;
    }
    if (fields[0] != "tensor") throw MalformedCheckpoint("unexpected line: " + header);
    read_tensor(header);
    header.clear();
  }
  if (!saw_end) throw MalformedCheckpoint("checkpoint missing end marker: " + path);

  for (std::size_t j = 0; j < m.enc_w.size(); ++j) {
    if (m.enc_w[j].a.empty() || m.enc_b[j].empty())
      throw MalformedCheckpoint("checkpoint missing encoder tensors for joint " +
                                std::to_string(j));
  }
  for (std::size_t l = 0; l < m.dec_w.size(); ++l) {
    if (m.dec_w[l].a.empty() || m.dec_b[l].empty())
      throw MalformedCheckpoint("checkpoint missing decoder tensors for layer " +
                                std::to_string(l));
  }
  return m;
}

void save_loss_curve(const std::string& path, const TrainResult& result) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "epoch,stage,mean_loss\n";
  for (const auto& row : result.curve)
    out << row.epoch << ',' << row.stage << ',' << fp17(row.mean_loss) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace nrdf
