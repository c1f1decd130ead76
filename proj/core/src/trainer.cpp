#include "ginr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "ginr/metrics.hpp"
#include "ginr/rng.hpp"

namespace ginr {

using json = nlohmann::json;

namespace {

constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
constexpr std::uint64_t kBatchStream = 0x6261746368ULL;
constexpr Eigen::Index kPredictChunk = 4096;

}  // namespace

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ContractError("learning rate must be positive");
  if (latent_lr < 0.0) throw ContractError("latent learning rate must be non-negative");
  if (batch_size < 1) throw ContractError("batch size must be at least 1");
  if (!(anneal_factor > 0.0 && anneal_factor <= 1.0)) throw ContractError("anneal factor must lie in (0, 1]");
  if (anneal_patience < 1 || early_stop_patience < 1) throw ContractError("patience must be at least 1");
  if (eval_every < 1) throw ContractError("eval_every must be at least 1");
  if (max_steps < 1) throw ContractError("max_steps must be at least 1");
  if (split.train < 0.0 || split.val < 0.0 || split.test < 0.0 ||
      std::abs(split.train + split.val + split.test - 1.0) > 1e-9)
    throw ContractError("split fractions must be non-negative and sum to 1");
}

NodeSplits make_splits(std::size_t n, const SplitFractions& f, std::uint64_t seed) {
  if (f.train < 0.0 || f.val < 0.0 || f.test < 0.0 || std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw ContractError("split fractions must be non-negative and sum to 1");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed, kSplitStream);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  const auto nv = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.val));
  const auto nt = static_cast<std::size_t>(std::floor(static_cast<double>(n) * f.test));
  NodeSplits s;
  s.val.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(nv));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(nv), perm.begin() + static_cast<std::ptrdiff_t>(nv + nt));
  s.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(nv + nt), perm.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

PlateauSchedule::PlateauSchedule(double lr, std::size_t patience, double factor)
    : lr_(lr), patience_(patience), factor_(factor), best_(std::numeric_limits<double>::infinity()) {}

double PlateauSchedule::observe(double loss) {
  if (loss < best_) {
    best_ = loss;
    since_best_ = 0;
  } else if (++since_best_ >= patience_) {
    lr_ *= factor_;
    since_best_ = 0;
  }
  return lr_;
}

std::string TrainRun::to_json() const {
  json j;
  j["config"] = {{"lr", config.lr},
                 {"batch_size", config.batch_size},
                 {"anneal_patience", config.anneal_patience},
                 {"anneal_factor", config.anneal_factor},
                 {"early_stop_patience", config.early_stop_patience},
                 {"eval_every", config.eval_every},
                 {"max_steps", config.max_steps},
                 {"target_loss", config.target_loss},
                 {"seed", config.seed},
                 {"split", {config.split.train, config.split.val, config.split.test}},
                 {"latent_lr", config.latent_lr}};
  j["steps_run"] = steps_run;
  j["best_loss"] = best_loss;
  j["best_val_step"] = best_val_step;
  j["early_stopped"] = early_stopped;
  j["loss_history"] = loss_history;
  j["lr_history"] = lr_history;
  j["val_history"] = json::array();
  for (const auto& [step, v] : val_history) j["val_history"].push_back({step, v});
  j["metrics"] = json::object();
  for (const auto& [name, m] : metrics) {
    j["metrics"][name] = {{"mse", m.mse}, {"count", m.count}, {"r2", m.r2 ? json(*m.r2) : json(nullptr)}};
  }
  j["split_sizes"] = {splits.train.size(), splits.val.size(), splits.test.size()};
  j["extras"] = extras;
  j["wall_seconds"] = wall_seconds;
  if (!checkpoint_path.empty()) j["checkpoint"] = checkpoint_path;
  return j.dump(2);
}

LossValue mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0)
    throw ContractError("mse_loss: shape mismatch");
  const double count = static_cast<double>(pred.size());
  LossValue out;
  const Eigen::MatrixXd diff = pred - target;
  out.value = diff.squaredNorm() / count;
  out.grad = (2.0 / count) * diff;
  return out;
}

LossValue laplacian_loss(const CsrMatrix& L, const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.size() == 0)
    throw ContractError("laplacian_loss: shape mismatch");
  if (static_cast<std::size_t>(pred.rows()) != L.size()) throw ContractError("laplacian_loss: Laplacian size mismatch");
  const double count = static_cast<double>(pred.size());
  const Eigen::MatrixXd Lr = L * Eigen::MatrixXd(target - pred);
  LossValue out;
  out.value = Lr.squaredNorm() / count;
  // L is symmetric, so the adjoint product is another multiply by L.
  out.grad = (-2.0 / count) * (L * Lr);
  return out;
}

Eigen::MatrixXd predict(const MLPModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& cond) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(model.config().output_dim));
  for (Eigen::Index start = 0; start < n; start += kPredictChunk) {
    const Eigen::Index len = std::min(kPredictChunk, n - start);
    const Eigen::MatrixXd c = cond.size() ? Eigen::MatrixXd(cond.middleRows(start, len)) : Eigen::MatrixXd();
    out.middleRows(start, len) = model.forward(inputs.middleRows(start, len), c);
  }
  return out;
}

namespace {

// Rows of a virtual regression dataset. `gather` fills inputs, conditioning and targets for a
// list of rows; `latent_of` maps a row to its latent index when latents are trained.
struct Dataset {
  std::size_t size = 0;
  std::function<void(std::span<const std::size_t>, Eigen::MatrixXd&, Eigen::MatrixXd&, Eigen::MatrixXd&)> gather;
  std::function<std::size_t(std::size_t)> latent_of;
};

struct LoopResult {
  MLPModel model;
  std::optional<LatentTable> latents;
  TrainRun run;
};

Eigen::MatrixXd latent_rows(const LatentTable& z, const Dataset& data, std::span<const std::size_t> rows) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(rows.size()), z.z.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) c.row(static_cast<Eigen::Index>(r)) = z.z.row(static_cast<Eigen::Index>(data.latent_of(rows[r])));
  return c;
}

// Predictions and truth over a set of rows, evaluated in chunks.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> evaluate_rows(const MLPModel& model, const std::optional<LatentTable>& z,
                                                          const Dataset& data, std::span<const std::size_t> rows) {
  const auto p = static_cast<Eigen::Index>(model.config().output_dim);
  Eigen::MatrixXd pred(static_cast<Eigen::Index>(rows.size()), p), truth(pred.rows(), p);
  Eigen::MatrixXd X, C, Y;
  for (std::size_t start = 0; start < rows.size(); start += static_cast<std::size_t>(kPredictChunk)) {
    const std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(kPredictChunk), rows.size() - start);
    const auto chunk = rows.subspan(start, len);
    data.gather(chunk, X, C, Y);
    if (z) C = latent_rows(*z, data, chunk);
    pred.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) = model.forward(X, C);
    truth.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) = Y;
  }
  return {std::move(pred), std::move(truth)};
}

SplitMetrics split_metrics(const MLPModel& model, const std::optional<LatentTable>& z, const Dataset& data,
                           std::span<const std::size_t> rows) {
  SplitMetrics m;
  m.count = rows.size();
  if (rows.empty()) return m;
  const auto [pred, truth] = evaluate_rows(model, z, data, rows);
  m.mse = mse(pred, truth);
  m.r2 = r2_score(pred, truth);
  return m;
}

LoopResult train_loop(const Dataset& data, const MLPConfig& model_config, const TrainConfig& cfg,
                      std::optional<LatentTable> latents) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  LoopResult res;
  res.model = MLPModel::init(model_config);
  res.latents = std::move(latents);
  TrainRun& run = res.run;
  run.config = cfg;
  run.splits = make_splits(data.size, cfg.split, cfg.seed);
  const auto& train = run.splits.train;
  if (train.empty()) throw ContractError("training split is empty");

  AdamState adam;
  adam.lr = cfg.lr;
  AdamState latent_adam;
  std::vector<std::size_t> latent_index;
  latent_adam.lr = cfg.latent_lr > 0.0 ? cfg.latent_lr : cfg.lr;
  PlateauSchedule schedule(cfg.lr, cfg.anneal_patience, cfg.anneal_factor);

  Rng rng(cfg.seed, kBatchStream);
  std::vector<std::size_t> pool = train;
  const bool full_batch = cfg.batch_size >= pool.size();
  const std::size_t batch = full_batch ? pool.size() : cfg.batch_size;

  double best_val = std::numeric_limits<double>::infinity();
  MLPModel best_model = res.model;
  std::optional<LatentTable> best_latents = res.latents;
  run.best_loss = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd X, C, Y;
  ForwardCache cache;
  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    if (!full_batch) {
      for (std::size_t i = 0; i < batch; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
    }
    const std::span<const std::size_t> rows(pool.data(), batch);
    data.gather(rows, X, C, Y);
    if (res.latents) C = latent_rows(*res.latents, data, rows);
    const Eigen::MatrixXd pred = res.model.forward(X, C, &cache);
    const LossValue loss = mse_loss(pred, Y);
    if (!std::isfinite(loss.value)) {
      run.steps_run = step - 1;
      throw DivergenceError("training loss became non-finite at step " + std::to_string(step), run);
    }
    Gradients grads = res.model.backward(cache, loss.grad);
    try {
      adam_step(adam, res.model, grads);
      if (res.latents) {
        latent_index.resize(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) latent_index[r] = data.latent_of(rows[r]);
        Eigen::MatrixXd g = latent_gradients(grads, latent_index, *res.latents);
        adam_step(latent_adam, *res.latents, g);
      }
    } catch (const NumericalError& e) {
      run.steps_run = step - 1;
      throw DivergenceError(e.what() + std::string(" at step ") + std::to_string(step), run);
    }
    run.loss_history.push_back(loss.value);
    run.lr_history.push_back(adam.lr);
    run.best_loss = std::min(run.best_loss, loss.value);
    run.steps_run = step;
    adam.lr = schedule.observe(loss.value);
    if (cfg.latent_lr > 0.0)
      latent_adam.lr = cfg.latent_lr * adam.lr / cfg.lr;
    else
      latent_adam.lr = adam.lr;

    if (!run.splits.val.empty() && (step % cfg.eval_every == 0 || step == cfg.max_steps)) {
      const SplitMetrics v = split_metrics(res.model, res.latents, data, run.splits.val);
      run.val_history.emplace_back(step, v.mse);
      if (v.mse < best_val) {
        best_val = v.mse;
        run.best_val_step = step;
        best_model = res.model;
        best_latents = res.latents;
      } else if (step - run.best_val_step >= cfg.early_stop_patience) {
        run.early_stopped = true;
        break;
      }
    }
    if (cfg.target_loss > 0.0 && loss.value <= cfg.target_loss) break;
  }
  if (!run.splits.val.empty()) {
    res.model = std::move(best_model);
    res.latents = std::move(best_latents);
  }
  res.model.check_finite();
  run.metrics["train"] = split_metrics(res.model, res.latents, data, run.splits.train);
  if (!run.splits.val.empty()) run.metrics["val"] = split_metrics(res.model, res.latents, data, run.splits.val);
  if (!run.splits.test.empty()) run.metrics["test"] = split_metrics(res.model, res.latents, data, run.splits.test);
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

void gather_rows(const Eigen::MatrixXd& src, std::span<const std::size_t> rows, Eigen::MatrixXd& out) {
  out.resize(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(rows[r]));
}

MLPConfig shaped(MLPConfig cfg, std::size_t input_dim, std::size_t cond_dim, std::size_t output_dim) {
  cfg.input_dim = input_dim;
  cfg.cond_dim = cond_dim;
  cfg.output_dim = output_dim;
  cfg.validate();
  return cfg;
}

}  // namespace

FitResult fit(const SpectralEmbedding& emb, const SignalField& target, const MLPConfig& model_config,
              const TrainConfig& train_config) {
  target.check(emb.n());
  Dataset data;
  data.size = emb.n();
  data.gather = [&](std::span<const std::size_t> rows, Eigen::MatrixXd& X, Eigen::MatrixXd& C, Eigen::MatrixXd& Y) {
    gather_rows(emb.matrix, rows, X);
    gather_rows(target.values, rows, Y);
    C.resize(0, 0);
  };
  auto res = train_loop(data, shaped(model_config, emb.k(), 0, target.channels()), train_config, std::nullopt);
  return {std::move(res.model), std::move(res.run)};
}

FitResult fit_laplacian_supervised(const SpectralEmbedding& emb, const SignalField& target, const CsrMatrix& L,
                                   const MLPConfig& model_config, const TrainConfig& cfg) {
  target.check(emb.n());
  if (L.size() != emb.n()) throw ContractError("Laplacian size does not match the embedding");
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  FitResult res;
  res.model = MLPModel::init(shaped(model_config, emb.k(), 0, target.channels()));
  TrainRun& run = res.run;
  run.config = cfg;
  run.splits.train.resize(emb.n());
  std::iota(run.splits.train.begin(), run.splits.train.end(), std::size_t{0});
  AdamState adam;
  adam.lr = cfg.lr;
  PlateauSchedule schedule(cfg.lr, cfg.anneal_patience, cfg.anneal_factor);
  run.best_loss = std::numeric_limits<double>::infinity();
  ForwardCache cache;
  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    const Eigen::MatrixXd pred = res.model.forward(emb.matrix, {}, &cache);
    const LossValue loss = laplacian_loss(L, pred, target.values);
    if (!std::isfinite(loss.value)) {
      run.steps_run = step - 1;
      throw DivergenceError("Laplacian loss became non-finite at step " + std::to_string(step), run);
    }
    Gradients grads = res.model.backward(cache, loss.grad);
    try {
      adam_step(adam, res.model, grads);
    } catch (const NumericalError& e) {
      run.steps_run = step - 1;
      throw DivergenceError(e.what() + std::string(" at step ") + std::to_string(step), run);
    }
    run.loss_history.push_back(loss.value);
    run.lr_history.push_back(adam.lr);
    run.best_loss = std::min(run.best_loss, loss.value);
    run.steps_run = step;
    adam.lr = schedule.observe(loss.value);
    if (cfg.target_loss > 0.0 && loss.value <= cfg.target_loss) break;
  }
  const Eigen::MatrixXd pred = predict(res.model, emb.matrix);
  SplitMetrics m;
  m.count = emb.n();
  m.mse = mse(pred, target.values);
  m.r2 = r2_score(pred, target.values);
  run.metrics["train"] = m;
  // Defined up to a constant: compare after removing per-channel means.
  const Eigen::MatrixXd pc = pred.rowwise() - pred.colwise().mean();
  const Eigen::MatrixXd tc = target.values.rowwise() - target.values.colwise().mean();
  SplitMetrics centered;
  centered.count = emb.n();
  centered.mse = mse(pc, tc);
  centered.r2 = r2_score(pc, tc);
  run.metrics["train_centered"] = centered;
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return res;
}

double TimeNormalization::operator()(double t) const {
  if (t_max <= t_min) return 0.0;
  return 2.0 * (t - t_min) / (t_max - t_min) - 1.0;
}

ConditionalTimeResult fit_conditional_time(const SpectralEmbedding& emb, std::span<const TimeFrame> frames,
                                           MLPConfig model_config, const TrainConfig& train_config) {
  if (frames.empty()) throw ContractError("no training frames");
  const std::size_t n = emb.n();
  const std::size_t p = frames.front().field.channels();
  TimeNormalization time{frames.front().t, frames.front().t};
  for (std::size_t f = 0; f < frames.size(); ++f) {
    frames[f].field.check(n);
    if (frames[f].field.channels() != p) throw ContractError("frames differ in channel count");
    for (std::size_t g = 0; g < f; ++g)
      if (frames[g].t == frames[f].t) throw ContractError("duplicate frame time");
    time.t_min = std::min(time.t_min, frames[f].t);
    time.t_max = std::max(time.t_max, frames[f].t);
  }
  std::vector<double> tn(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) tn[f] = time(frames[f].t);

  Dataset data;
  data.size = n * frames.size();
  data.gather = [&](std::span<const std::size_t> rows, Eigen::MatrixXd& X, Eigen::MatrixXd& C, Eigen::MatrixXd& Y) {
    const auto b = static_cast<Eigen::Index>(rows.size());
    X.resize(b, emb.matrix.cols());
    C.resize(b, 1);
    Y.resize(b, static_cast<Eigen::Index>(p));
    for (Eigen::Index r = 0; r < b; ++r) {
      const std::size_t f = rows[static_cast<std::size_t>(r)] / n;
      const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)] % n);
      X.row(r) = emb.matrix.row(i);
      C(r, 0) = tn[f];
      Y.row(r) = frames[f].field.values.row(i);
    }
  };
  model_config.cond_dim = 1;
  auto res = train_loop(data, shaped(model_config, emb.k(), 1, p), train_config, std::nullopt);
  return {std::move(res.model), std::move(res.run), time};
}

Eigen::MatrixXd predict_at_time(const MLPModel& model, const SpectralEmbedding& emb, double t,
                                const TimeNormalization& time) {
  const Eigen::MatrixXd cond = Eigen::MatrixXd::Constant(emb.matrix.rows(), 1, time(t));
  return predict(model, emb.matrix, cond);
}

Eigen::MatrixXd interpolate_frames(std::span<const TimeFrame> frames, double t) {
  if (frames.empty()) throw ContractError("no frames to interpolate");
  for (std::size_t f = 1; f < frames.size(); ++f)
    if (!(frames[f - 1].t < frames[f].t)) throw ContractError("frames must be sorted by increasing time");
  if (t <= frames.front().t) return frames.front().field.values;
  if (t >= frames.back().t) return frames.back().field.values;
  const auto it = std::upper_bound(frames.begin(), frames.end(), t, [](double v, const TimeFrame& f) { return v < f.t; });
  const TimeFrame& hi = *it;
  const TimeFrame& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return (1.0 - w) * lo.field.values + w * hi.field.values;
}

AutodecoderResult fit_autodecoder(std::span<const DomainSample> dataset, std::size_t latent_dim,
                                  MLPConfig model_config, const TrainConfig& train_config) {
  if (latent_dim == 0) throw ContractError("autodecoder needs a latent dimension of at least 1");
  if (dataset.empty()) throw ContractError("autodecoder dataset is empty");
  const std::size_t k = dataset.front().embedding.k();
  const std::size_t p = dataset.front().signal.channels();
  std::vector<std::size_t> offsets{0};
  for (const auto& s : dataset) {
    if (s.embedding.k() != k) throw ContractError("all samples need the same embedding width");
    s.signal.check(s.embedding.n());
    if (s.signal.channels() != p) throw ContractError("all samples need the same channel count");
    offsets.push_back(offsets.back() + s.embedding.n());
  }
  auto locate = [&](std::size_t row) {
    const auto it = std::upper_bound(offsets.begin(), offsets.end(), row);
    const auto sample = static_cast<std::size_t>(it - offsets.begin()) - 1;
    return std::pair{sample, row - offsets[sample]};
  };
  Dataset data;
  data.size = offsets.back();
  data.gather = [&](std::span<const std::size_t> rows, Eigen::MatrixXd& X, Eigen::MatrixXd& C, Eigen::MatrixXd& Y) {
    const auto b = static_cast<Eigen::Index>(rows.size());
    X.resize(b, static_cast<Eigen::Index>(k));
    Y.resize(b, static_cast<Eigen::Index>(p));
    C.resize(0, 0);
    for (Eigen::Index r = 0; r < b; ++r) {
      const auto [s, i] = locate(rows[static_cast<std::size_t>(r)]);
      X.row(r) = dataset[s].embedding.matrix.row(static_cast<Eigen::Index>(i));
      Y.row(r) = dataset[s].signal.values.row(static_cast<Eigen::Index>(i));
    }
  };
  data.latent_of = [&](std::size_t row) { return locate(row).first; };

  LatentTable z;
  z.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dataset.size()), static_cast<Eigen::Index>(latent_dim));
  auto res = train_loop(data, shaped(model_config, k, latent_dim, p), train_config, std::move(z));

  AutodecoderResult out{std::move(res.model), std::move(*res.latents), std::move(res.run), {}};
  for (std::size_t s = 0; s < dataset.size(); ++s) {
    const Eigen::MatrixXd pred = predict_with_latent(out.model, dataset[s].embedding, out.latents.z.row(static_cast<Eigen::Index>(s)).transpose());
    out.r2.push_back(r2_score(pred, dataset[s].signal.values));
  }
  return out;
}

Eigen::MatrixXd predict_with_latent(const MLPModel& model, const SpectralEmbedding& emb, const Eigen::VectorXd& latent) {
  if (static_cast<std::size_t>(latent.size()) != model.config().cond_dim)
    throw ContractError("latent size does not match the model's conditioning width");
  const Eigen::MatrixXd cond = latent.transpose().replicate(emb.matrix.rows(), 1);
  return predict(model, emb.matrix, cond);
}

}  // namespace ginr
