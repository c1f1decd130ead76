#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ginr/graph.hpp"
#include "ginr/sparse.hpp"

namespace ginr {

/// First k eigenpairs of a graph Laplacian, eigenvalues ascending.
struct EigenBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // n x k, unit columns
  Eigen::VectorXd residual_norms;
  LaplacianKind laplacian_kind = LaplacianKind::combinatorial;

  std::size_t n() const noexcept { return static_cast<std::size_t>(eigenvectors.rows()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(eigenvectors.cols()); }
};

/// Rows are node embeddings: matrix = sqrt(n) * eigenvectors.
struct SpectralEmbedding {
  Eigen::MatrixXd matrix;  // n x k
  Eigen::VectorXd eigenvalues;
  std::uint64_t graph_hash = 0;

  std::size_t n() const noexcept { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t k() const noexcept { return static_cast<std::size_t>(matrix.cols()); }

  /// First `k` columns.
  SpectralEmbedding leading(std::size_t k) const;
};

enum class SpectralTransform {
  /// Lanczos on c*I - L, c the Gershgorin bound. Factorization free, slow for tiny gaps.
  shift,
  /// Lanczos on (L + tau*I)^-1 through a sparse LDL^T factorization.
  shift_invert,
};

struct EigensolverOptions {
  double tol = 1e-8;
  std::size_t max_restarts = 300;
  std::uint64_t seed = 0;
  SpectralTransform transform = SpectralTransform::shift_invert;
  /// Krylov basis size; 0 selects max(2k + 20, 40) capped at n.
  std::size_t basis_size = 0;
};

/// Smallest k eigenpairs of a symmetric Laplacian by thick-restart Lanczos with full
/// reorthogonalization. Every returned pair satisfies ||Lu - lambda u|| <= tol * max(1, |lambda|),
/// checked directly; NumericalError reports the achieved residuals otherwise. Repeated
/// eigenvalues are completed by deflated re-runs so multiplicities are returned in full.
EigenBasis smallest_eigenpairs(const CsrMatrix& laplacian, std::size_t k,
                               const EigensolverOptions& options = {});

/// Graph-level entry point. random_walk is solved through the symmetric problem and mapped
/// back with D^-1/2; those columns are unit-norm and D-orthogonal rather than orthonormal.
EigenBasis graph_eigenpairs(const Graph& g, std::size_t k, LaplacianKind kind,
                            const EigensolverOptions& options = {});

/// Canonical sign per column: positive cube sum, or when the cube sum is negligible
/// (|sum u^3| < max(1e-12, 1e-6 * sum |u|^3)), a positive largest-magnitude entry; entries
/// within 1e-6 relative of the maximum count as ties and the first index wins.
EigenBasis sign_fix(EigenBasis basis);
/// Sign that sign_fix would apply to one column.
double canonical_sign(std::span<const double> column);

/// Sign-fixed, sqrt(n)-rescaled eigenvectors.
SpectralEmbedding embed(const EigenBasis& basis, std::uint64_t graph_hash = 0);

/// Inclusive index range [first, last] of a run of (near-)equal eigenvalues.
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const noexcept { return last - first + 1; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Maximal runs with |lambda_{i+1} - lambda_i| <= rel_gap * max(1, lambda_{i+1}).
std::vector<IndexRange> detect_degeneracies(const Eigen::VectorXd& eigenvalues, double rel_gap);

struct ColumnAlignment {
  std::size_t column = 0;
  double sign = 1.0;
  double distance_kept = 0.0;     // L1 histogram distance with the target as is
  double distance_flipped = 0.0;  // ... and negated
  bool ambiguous = false;         // min/max distance ratio > 0.9
  bool degenerate = false;        // inside a repeated-eigenvalue block
  bool anchored = false;          // resolved through shared nodes instead of histograms
};

struct AlignmentReport {
  std::vector<ColumnAlignment> columns;
  std::vector<IndexRange> degenerate_blocks;
  std::size_t ambiguous_count() const;
};

struct AlignedEmbedding {
  SpectralEmbedding embedding;
  AlignmentReport report;
};

/// Nodes known to be the same in reference and target: target node anchors.target[i]
/// corresponds to reference node anchors.reference[i].
struct NodeCorrespondence {
  std::vector<std::size_t> reference;
  std::vector<std::size_t> target;
};

struct AlignmentOptions {
  std::size_t bins = 64;
  double ambiguity_ratio = 0.9;
  double degeneracy_rel_gap = 1e-6;
  /// When set, repeated-eigenvalue blocks are rotated onto the reference by orthogonal
  /// Procrustes over the shared nodes; histogram signs cannot resolve them.
  std::optional<NodeCorrespondence> anchors;
};

/// Picks per-column signs of `target` whose 64-bin histograms best match the reference's.
/// Uses the first ref.k() target columns; `target` may hold more, which are only consulted to
/// complete a repeated-eigenvalue block cut by k when anchors are given.
AlignedEmbedding align_to_reference(const SpectralEmbedding& ref, const EigenBasis& target,
                                    const AlignmentOptions& options = {});

struct TruncatedEmbedding {
  SpectralEmbedding embedding;
  std::vector<std::size_t> dropped;
};

/// True when fewer than flatness_threshold * n entries differ from the column median by more
/// than 1e-6 * sqrt(n).
bool is_almost_trivial(std::span<const double> column, double flatness_threshold);

/// Drops the leading run of almost-trivial columns. Throws ContractError if every column is.
TruncatedEmbedding truncate_trivial(const SpectralEmbedding& emb, double flatness_threshold);

/// Embedding cache: "GEMB", u32 version = 1, u64 n, u64 k, u64 graph hash, k f64 eigenvalues,
/// n*k f64 row-major embedding; all little-endian.
void save_embedding(const SpectralEmbedding& emb, const std::filesystem::path& path);
SpectralEmbedding load_embedding(const std::filesystem::path& path);

/// Eigenbasis implied by an embedding (columns divided by sqrt(n)); residuals unknown (zero).
EigenBasis basis_from_embedding(const SpectralEmbedding& emb);

}  // namespace ginr
