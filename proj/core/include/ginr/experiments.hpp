#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ginr/graph.hpp"
#include "ginr/metrics.hpp"
#include "ginr/mlp.hpp"
#include "ginr/spectral.hpp"
#include "ginr/trainer.hpp"

namespace ginr {

/// r = ln(n)/n * (sqrt(2) + sqrt(n p / ln(n)))^2: above this intra-community probability
/// exact recovery of the two communities is possible.
double sbm_recovery_boundary(std::size_t n, double p);

/// Label decoding for the community signal: prediction >= 0.5 maps to 1.
std::vector<int> threshold_labels(const Eigen::MatrixXd& pred, double threshold = 0.5);

struct SweepConfig {
  SBMParams train{1000, 0.1, 0.5, 0};
  std::vector<double> grid_p;
  std::vector<double> grid_r;
  std::size_t k = 3;
  /// The combinatorial Laplacian's bulk eigenvectors localize on the lowest-degree node, which
  /// a ReLU network extrapolates badly; the normalized bulk is delocalized.
  LaplacianKind kind = LaplacianKind::symmetric;
  std::size_t seeds = 5;
  MLPConfig model{};
  TrainConfig training{};
  EigensolverOptions eigen{};
  std::size_t threads = 1;
};

struct SweepCell {
  double p = 0.0;
  double r = 0.0;
  std::vector<double> nmi;  // one per seed
  double nmi_mean = 0.0;
  double nmi_std = 0.0;
  double boundary = 0.0;  // recovery threshold on r at this p
  std::size_t degenerate_blocks = 0;
  std::size_t ambiguous_columns = 0;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // row-major over (grid_p, grid_r)
  FitResult fit;
  SpectralEmbedding reference;
  double train_nmi = 0.0;
};

/// Trained community model applied to a freshly sampled SBM after histogram alignment.
struct TransferOutcome {
  double nmi = 0.0;
  AlignmentReport alignment;
};
TransferOutcome sbm_transfer(const MLPModel& model, const SpectralEmbedding& reference,
                             const SBMParams& params, const EigensolverOptions& eigen = {},
                             LaplacianKind kind = LaplacianKind::combinatorial);

/// Trains once on the training SBM and evaluates every grid cell on `seeds` fresh graphs.
/// Cell seeds are derived from (train seed, cell index, seed index); cells may run in parallel.
SweepResult sbm_transfer_sweep(const SweepConfig& config);

/// Columns: p, r, nmi_mean, nmi_std, boundary_r, recoverable, degenerate_blocks, ambiguous_columns.
void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path);
/// Columns: p, r_boundary.
void write_boundary_csv(std::size_t n, std::span<const double> grid_p, const std::filesystem::path& path);

struct SuperResolveOptions {
  LaplacianKind kind = LaplacianKind::combinatorial;
  EigensolverOptions eigen{};
  /// Ground truth on the reference nodes, for the error report.
  std::optional<SignalField> reference_signal;
  /// Fine nodes [0, ref.n()) are the reference nodes (true for loop_subdivide output); enables
  /// anchor-based alignment of repeated-eigenvalue blocks and the error report.
  bool shared_prefix = true;
  /// Extra eigenpairs solved on the fine graph to complete a repeated block cut by k.
  std::size_t extra_pairs = 8;
  double trim_percentile = 90.0;
};

struct SuperResolution {
  SignalField prediction;
  AlignmentReport alignment;
  std::optional<TrimmedR2> metrics;
  Eigen::VectorXd squared_errors;  // on the shared nodes
};

SuperResolution super_resolve(const MLPModel& model, const SpectralEmbedding& ref_emb, const Graph& fine,
                              std::size_t k, const SuperResolveOptions& options = {});

struct AblationRow {
  std::size_t k = 0;
  std::optional<double> r2;
  double mse = 0.0;
};

/// One model per k on the leading k columns of `emb`, identical seeds and splits. R2 is
/// measured on the test split when one exists, otherwise on all nodes.
std::vector<AblationRow> k_ablation(const SpectralEmbedding& emb, const SignalField& signal,
                                    std::span<const std::size_t> k_list, const MLPConfig& model_config,
                                    const TrainConfig& train_config, std::size_t threads = 1);
std::vector<AblationRow> k_ablation(const Graph& g, const SignalField& signal, std::span<const std::size_t> k_list,
                                    const MLPConfig& model_config, const TrainConfig& train_config,
                                    std::size_t threads = 1, const EigensolverOptions& eigen = {});

void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& path);

}  // namespace ginr
