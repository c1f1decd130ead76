#include "ginr/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <tuple>

#include "ginr/error.hpp"

namespace ginr {

namespace {

struct Entry {
  std::size_t row;
  std::size_t col;
  double weight;
};

}  // namespace

Graph Graph::from_edges(std::size_t n, std::span<const Edge> edges, std::optional<std::vector<Vec3>> positions,
                        std::optional<std::vector<Face>> faces) {
  std::vector<Entry> entries;
  entries.reserve(2 * edges.size());
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n)
      throw ContractError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) + ") references a node >= " +
                          std::to_string(n));
    if (e.u == e.v) throw ContractError("self-loop on node " + std::to_string(e.u));
    if (!std::isfinite(e.weight) || e.weight <= 0.0)
      throw ContractError("edge (" + std::to_string(e.u) + ", " + std::to_string(e.v) +
                          ") has non-positive or non-finite weight");
    entries.push_back({e.u, e.v, e.weight});
    entries.push_back({e.v, e.u, e.weight});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return std::tie(a.row, a.col) < std::tie(b.row, b.col); });

  Graph g;
  g.n_ = n;
  g.offsets_.assign(n + 1, 0);
  g.cols_.reserve(entries.size());
  g.weights_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const Entry& e = entries[i];
    if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col) {
      if (std::memcmp(&entries[i - 1].weight, &e.weight, sizeof(double)) != 0)
        throw ContractError("conflicting duplicate edge (" + std::to_string(std::min(e.row, e.col)) + ", " +
                            std::to_string(std::max(e.row, e.col)) + ")");
      continue;
    }
    g.cols_.push_back(e.col);
    g.weights_.push_back(e.weight);
    ++g.offsets_[e.row + 1];
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());

  if (positions && positions->size() != n)
    throw ContractError("position count " + std::to_string(positions->size()) + " != node count " + std::to_string(n));
  g.positions_ = std::move(positions);
  g.faces_ = std::move(faces);
  if (g.faces_) g.validate();
  return g;
}

Graph Graph::from_mesh(std::vector<Vec3> positions, std::vector<Face> faces) {
  const std::size_t n = positions.size();
  std::vector<Edge> edges;
  edges.reserve(3 * faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Face& t = faces[f];
    for (std::size_t c = 0; c < 3; ++c) {
      if (t[c] >= n) throw ContractError("face " + std::to_string(f) + " references a missing vertex");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw ContractError("face " + std::to_string(f) + " is degenerate");
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t a = t[c];
      const std::size_t b = t[(c + 1) % 3];
      edges.push_back({std::min(a, b), std::max(a, b), 1.0});
    }
  }
  return from_edges(n, edges, std::move(positions), std::move(faces));
}

double Graph::degree(std::size_t i) const {
  double d = 0.0;
  for (double w : neighbor_weights(i)) d += w;
  return d;
}

std::vector<double> Graph::degrees() const {
  std::vector<double> d(n_);
  for (std::size_t i = 0; i < n_; ++i) d[i] = degree(i);
  return d;
}

std::optional<double> Graph::edge_weight(std::size_t i, std::size_t j) const {
  const auto nb = neighbors(i);
  const auto it = std::lower_bound(nb.begin(), nb.end(), j);
  if (it == nb.end() || *it != j) return std::nullopt;
  return neighbor_weights(i)[static_cast<std::size_t>(it - nb.begin())];
}

const std::vector<Vec3>& Graph::positions() const {
  if (!positions_) throw ContractError("graph has no vertex positions");
  return *positions_;
}

const std::vector<Face>& Graph::faces() const {
  if (!faces_) throw ContractError("graph has no faces");
  return *faces_;
}

void Graph::validate() const {
  if (offsets_.size() != n_ + 1 || offsets_.back() != cols_.size() || cols_.size() != weights_.size())
    throw ContractError("graph arrays are inconsistent");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) {
      const std::size_t j = cols_[e];
      if (j >= n_) throw ContractError("neighbor id out of range");
      if (j == i) throw ContractError("self-loop on node " + std::to_string(i));
      if (e > offsets_[i] && cols_[e - 1] >= j) throw ContractError("neighbor list not strictly sorted");
      if (!(weights_[e] > 0.0) || !std::isfinite(weights_[e])) throw ContractError("non-positive weight");
      const auto back = edge_weight(j, i);
      if (!back || std::memcmp(&*back, &weights_[e], sizeof(double)) != 0)
        throw ContractError("adjacency is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
  if (positions_ && positions_->size() != n_) throw ContractError("position count differs from node count");
  if (faces_) {
    for (std::size_t f = 0; f < faces_->size(); ++f) {
      const Face& t = (*faces_)[f];
      if (t[0] >= n_ || t[1] >= n_ || t[2] >= n_ || t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        throw ContractError("face " + std::to_string(f) + " is invalid");
      for (std::size_t c = 0; c < 3; ++c) {
        if (!edge_weight(t[c], t[(c + 1) % 3]))
          throw ContractError("face " + std::to_string(f) + " has an edge missing from the adjacency");
      }
    }
  }
}

std::uint64_t Graph::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t n = n_;
  mix(&n, sizeof n);
  for (std::size_t o : offsets_) {
    const std::uint64_t v = o;
    mix(&v, sizeof v);
  }
  for (std::size_t c : cols_) {
    const std::uint64_t v = c;
    mix(&v, sizeof v);
  }
  mix(weights_.data(), weights_.size() * sizeof(double));
  return h;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e)
      if (cols_[e] > i) out.push_back({i, cols_[e], weights_[e]});
  return out;
}

SignalField::SignalField(Eigen::MatrixXd v, std::vector<std::string> names)
    : values(std::move(v)), channel_names(std::move(names)) {}

void SignalField::check(std::size_t n) const {
  if (rows() != n)
    throw ContractError("signal has " + std::to_string(rows()) + " rows, expected " + std::to_string(n));
  if (channels() < 1) throw ContractError("signal has no channels");
  if (!values.allFinite()) throw ContractError("signal has non-finite entries");
  if (!channel_names.empty() && channel_names.size() != channels())
    throw ContractError("channel name count differs from channel count");
}

std::string_view to_string(LaplacianKind kind) {
  switch (kind) {
    case LaplacianKind::combinatorial: return "combinatorial";
    case LaplacianKind::symmetric: return "symmetric";
    case LaplacianKind::random_walk: return "random_walk";
  }
  return "?";
}

LaplacianKind parse_laplacian_kind(std::string_view text) {
  if (text == "comb" || text == "combinatorial") return LaplacianKind::combinatorial;
  if (text == "sym" || text == "symmetric") return LaplacianKind::symmetric;
  if (text == "rw" || text == "random_walk") return LaplacianKind::random_walk;
  throw ContractError("unknown Laplacian kind '" + std::string(text) + "'");
}

CsrMatrix laplacian(const Graph& g, LaplacianKind kind) {
  const std::size_t n = g.num_nodes();
  const std::vector<double> deg = g.degrees();
  if (kind != LaplacianKind::combinatorial) {
    for (std::size_t i = 0; i < n; ++i)
      if (!(deg[i] > 0.0)) throw ContractError("isolated node " + std::to_string(i) + " under a normalized Laplacian");
  }
  std::vector<double> inv_sqrt(n, 1.0);
  if (kind == LaplacianKind::symmetric)
    for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(deg[i]);

  std::vector<std::size_t> offsets(n + 1, 0);
  std::vector<std::size_t> cols;
  std::vector<double> vals;
  cols.reserve(g.col_indices().size() + n);
  vals.reserve(g.col_indices().size() + n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nb = g.neighbors(i);
    const auto w = g.neighbor_weights(i);
    bool diagonal_done = false;
    auto push_diagonal = [&] {
      cols.push_back(i);
      vals.push_back(kind == LaplacianKind::combinatorial ? deg[i] : 1.0);
      diagonal_done = true;
    };
    for (std::size_t e = 0; e < nb.size(); ++e) {
      if (!diagonal_done && nb[e] > i) push_diagonal();
      double v = -w[e];
      if (kind == LaplacianKind::symmetric) v *= inv_sqrt[i] * inv_sqrt[nb[e]];
      if (kind == LaplacianKind::random_walk) v /= deg[i];
      cols.push_back(nb[e]);
      vals.push_back(v);
    }
    if (!diagonal_done) push_diagonal();
    offsets[i + 1] = cols.size();
  }
  return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

std::vector<std::size_t> connected_components(const Graph& g) {
  const std::size_t n = g.num_nodes();
  constexpr std::size_t unset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> comp(n, unset);
  std::vector<std::size_t> stack;
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] != unset) continue;
    comp[s] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v : g.neighbors(u)) {
        if (comp[v] == unset) {
          comp[v] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

std::size_t count_components(const Graph& g) {
  const auto comp = connected_components(g);
  return comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
}

}  // namespace ginr
