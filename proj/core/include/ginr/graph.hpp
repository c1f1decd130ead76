#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ginr/sparse.hpp"

namespace ginr {

using Vec3 = std::array<double, 3>;
using Face = std::array<std::size_t, 3>;

/// Undirected weighted edge. Orientation is irrelevant.
struct Edge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 1.0;
};

/// Immutable sparse weighted undirected graph. The adjacency is stored symmetrically in
/// compressed rows with sorted neighbor lists; optional vertex positions and triangle faces
/// travel with it for meshes.
class Graph {
 public:
  Graph() = default;

  /// Builds a graph from undirected edges. Identical duplicates (in either orientation)
  /// collapse to one edge; duplicates with conflicting weights, self-loops, non-positive or
  /// non-finite weights, and out-of-range ids throw ContractError.
  static Graph from_edges(std::size_t n, std::span<const Edge> edges,
                          std::optional<std::vector<Vec3>> positions = std::nullopt,
                          std::optional<std::vector<Face>> faces = std::nullopt);

  /// Unit-weight graph of a triangle mesh: one edge per distinct face side.
  static Graph from_mesh(std::vector<Vec3> positions, std::vector<Face> faces);

  std::size_t num_nodes() const noexcept { return n_; }
  /// Number of undirected edges.
  std::size_t num_edges() const noexcept { return cols_.size() / 2; }

  std::span<const std::size_t> row_offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return cols_; }
  std::span<const double> weights() const noexcept { return weights_; }

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {cols_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> neighbor_weights(std::size_t i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  /// Weighted degree (row sum of the adjacency).
  double degree(std::size_t i) const;
  std::vector<double> degrees() const;

  /// Weight of edge (i, j), or nullopt when absent.
  std::optional<double> edge_weight(std::size_t i, std::size_t j) const;

  bool has_positions() const noexcept { return positions_.has_value(); }
  bool has_faces() const noexcept { return faces_.has_value(); }
  const std::vector<Vec3>& positions() const;
  const std::vector<Face>& faces() const;

  /// Re-checks every structural invariant; throws ContractError on the first violation.
  void validate() const;

  /// 64-bit FNV-1a digest of the node count and the adjacency arrays.
  std::uint64_t hash() const;

  /// Undirected edge list with u < v, in row order.
  std::vector<Edge> edges() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> weights_;
  std::optional<std::vector<Vec3>> positions_;
  std::optional<std::vector<Face>> faces_;
};

/// Real-valued signal on the nodes of a graph: n rows, p >= 1 channels.
struct SignalField {
  Eigen::MatrixXd values;
  std::vector<std::string> channel_names;

  SignalField() = default;
  explicit SignalField(Eigen::MatrixXd v, std::vector<std::string> names = {});

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t channels() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Throws ContractError unless rows() == n, channels() >= 1 and all entries are finite.
  void check(std::size_t n) const;
};

enum class LaplacianKind { combinatorial, symmetric, random_walk };

std::string_view to_string(LaplacianKind kind);
/// Accepts "comb"/"combinatorial", "sym"/"symmetric", "rw"/"random_walk".
LaplacianKind parse_laplacian_kind(std::string_view text);

/// L = D - A, L_sym = D^-1/2 L D^-1/2, or L_rw = D^-1 L. The normalized kinds require every
/// node to have positive degree.
CsrMatrix laplacian(const Graph& g, LaplacianKind kind);

/// Two-community stochastic block model. Note the naming: p is the probability of an
/// edge between communities, r the probability within a community.
struct SBMParams {
  std::size_t n = 1000;
  double p = 0.1;
  double r = 0.5;
  std::uint64_t seed = 0;
};

/// Samples every pair i < j in lexicographic order. Nodes [0, n/2) form community 0.
/// Returns the graph and a one-channel signal with the community labels {0, 1}.
std::pair<Graph, SignalField> generate_sbm(const SBMParams& params);

/// Chain 0 - 1 - ... - (n-1) with unit weights.
Graph generate_path(std::size_t n);

/// Regular icosahedron with each face split into four `subdivisions` times, vertices
/// projected onto the unit sphere. Has 10 * 4^s + 2 vertices.
Graph generate_icosphere(std::size_t subdivisions);

/// One step of Loop subdivision. Original vertices keep their indices; the midpoint of the
/// e-th edge (in Graph::edges() order) becomes node V + e.
Graph loop_subdivide(const Graph& g);

/// Component id per node; ids are assigned in order of each component's smallest node.
std::vector<std::size_t> connected_components(const Graph& g);
std::size_t count_components(const Graph& g);

}  // namespace ginr
