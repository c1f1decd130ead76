#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ginr/error.hpp"
#include "ginr/graph.hpp"
#include "ginr/mlp.hpp"
#include "ginr/sparse.hpp"
#include "ginr/spectral.hpp"

namespace ginr {

struct SplitFractions {
  double train = 1.0;
  double val = 0.0;
  double test = 0.0;
};

struct NodeSplits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Random partition of [0, n) into the given fractions (which must sum to 1), reproducible
/// from the seed. Sizes are floor(n * val) and floor(n * test); train takes the rest.
NodeSplits make_splits(std::size_t n, const SplitFractions& fractions, std::uint64_t seed);

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 5000;
  /// The learning rate is multiplied by anneal_factor once the best training loss has not
  /// improved for anneal_patience consecutive steps.
  std::size_t anneal_patience = 1000;
  double anneal_factor = 0.5;
  /// Stop when the validation loss has not improved for this many steps (splits only).
  std::size_t early_stop_patience = 1000;
  std::size_t eval_every = 10;
  std::size_t max_steps = 10000;
  /// Stop once the training batch loss drops to this value (0 disables).
  double target_loss = 0.0;
  std::uint64_t seed = 0;
  SplitFractions split{};
  /// Adam rate of the autodecoder latent rows; 0 means "same as lr". Zero-initialized latents
  /// barely move at network-sized rates, so the default is larger.
  double latent_lr = 1e-2;

  void validate() const;
};

/// Halve-on-plateau learning-rate schedule.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, std::size_t patience, double factor = 0.5);
  /// Records one loss; returns the learning rate for the next step.
  double observe(double loss);
  double lr() const noexcept { return lr_; }
  double best() const noexcept { return best_; }

 private:
  double lr_;
  std::size_t patience_;
  double factor_;
  double best_;
  std::size_t since_best_ = 0;
};

struct SplitMetrics {
  std::optional<double> r2;
  double mse = 0.0;
  std::size_t count = 0;
};

struct TrainRun {
  TrainConfig config;
  std::vector<double> loss_history;
  std::vector<double> lr_history;
  std::vector<std::pair<std::size_t, double>> val_history;
  double best_loss = 0.0;
  std::size_t steps_run = 0;
  std::size_t best_val_step = 0;
  bool early_stopped = false;
  std::map<std::string, SplitMetrics> metrics;
  NodeSplits splits;
  double wall_seconds = 0.0;
  std::string checkpoint_path;
  /// Extra numbers an experiment wants to report (resolved flags, baselines, ...).
  std::map<std::string, double> extras;

  /// JSON text report.
  std::string to_json() const;
};

/// Training stopped because the loss became non-finite. Carries the history so far.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, TrainRun run) : NumericalError(what), run_(std::move(run)) {}
  const TrainRun& run() const noexcept { return run_; }

 private:
  TrainRun run_;
};

struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd grad;  // d value / d pred
};

/// Mean of squared entries of pred - target.
LossValue mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// ||L (target - pred)||_F^2 / (n p). Unchanged by adding a constant to pred.
LossValue laplacian_loss(const CsrMatrix& laplacian, const Eigen::MatrixXd& pred,
                         const Eigen::MatrixXd& target);

/// Forward pass in row chunks (no cache).
Eigen::MatrixXd predict(const MLPModel& model, const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& cond = {});

struct FitResult {
  MLPModel model;
  TrainRun run;
};

/// Mini-batch MSE regression from embedding rows to signal rows. With validation nodes the
/// best-validation model is returned, otherwise the final one.
FitResult fit(const SpectralEmbedding& emb, const SignalField& target, const MLPConfig& model_config,
              const TrainConfig& train_config);

/// Full-graph training on ||L f - L f_theta||^2. The result is defined up to the null space of L.
FitResult fit_laplacian_supervised(const SpectralEmbedding& emb, const SignalField& target,
                                   const CsrMatrix& laplacian, const MLPConfig& model_config,
                                   const TrainConfig& train_config);

/// Affine map of the training time range onto [-1, 1] (a single time maps to 0).
struct TimeNormalization {
  double t_min = 0.0;
  double t_max = 0.0;
  double operator()(double t) const;
};

struct TimeFrame {
  double t = 0.0;
  SignalField field;
};

struct ConditionalTimeResult {
  MLPModel model;
  TrainRun run;
  TimeNormalization time;
};

/// Trains f(e_i, t) on every (node, frame) pair. model_config.cond_dim is forced to 1.
ConditionalTimeResult fit_conditional_time(const SpectralEmbedding& emb, std::span<const TimeFrame> frames,
                                           MLPConfig model_config, const TrainConfig& train_config);

Eigen::MatrixXd predict_at_time(const MLPModel& model, const SpectralEmbedding& emb, double t,
                                const TimeNormalization& time);

/// Per-node linear interpolation between the two training frames bracketing t (clamped at
/// the ends). Frames must be sorted by time.
Eigen::MatrixXd interpolate_frames(std::span<const TimeFrame> frames, double t);

struct DomainSample {
  SpectralEmbedding embedding;
  SignalField signal;
};

struct AutodecoderResult {
  MLPModel model;
  LatentTable latents;
  TrainRun run;
  std::vector<std::optional<double>> r2;  // per sample, on all its nodes
};

/// Jointly learns the network and one zero-initialized latent row per sample; batches mix
/// nodes from all samples. model_config.cond_dim is forced to latent_dim.
AutodecoderResult fit_autodecoder(std::span<const DomainSample> dataset, std::size_t latent_dim,
                                  MLPConfig model_config, const TrainConfig& train_config);

/// Predictions for one sample of an autodecoder.
Eigen::MatrixXd predict_with_latent(const MLPModel& model, const SpectralEmbedding& emb,
                                    const Eigen::VectorXd& latent);

}  // namespace ginr
