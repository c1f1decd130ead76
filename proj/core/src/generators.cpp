#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "ginr/error.hpp"
#include "ginr/graph.hpp"
#include "ginr/rng.hpp"

namespace ginr {

Graph generate_path(std::size_t n) {
  if (n < 2) throw ContractError("path graph needs n >= 2");
  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, 1.0});
  return Graph::from_edges(n, edges);
}

namespace {

Vec3 normalized(const Vec3& v) {
  const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
  return {v[0] / len, v[1] / len, v[2] / len};
}

}  // namespace

Graph generate_icosphere(std::size_t subdivisions) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> pos = {
      {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
  };
  for (auto& p : pos) p = normalized(p);
  std::vector<Face> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1},
  };

  for (std::size_t s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> midpoint;
    auto mid = [&](std::size_t a, std::size_t b) {
      const auto key = std::minmax(a, b);
      const auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const Vec3& pa = pos[a];
      const Vec3& pb = pos[b];
      pos.push_back(normalized({(pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2, (pa[2] + pb[2]) / 2}));
      midpoint.emplace(key, pos.size() - 1);
      return pos.size() - 1;
    };
    std::vector<Face> next;
    next.reserve(4 * faces.size());
    for (const Face& f : faces) {
      const std::size_t ab = mid(f[0], f[1]);
      const std::size_t bc = mid(f[1], f[2]);
      const std::size_t ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  return Graph::from_mesh(std::move(pos), std::move(faces));
}

std::pair<Graph, SignalField> generate_sbm(const SBMParams& params) {
  const std::size_t n = params.n;
  if (n < 2 || n % 2 != 0) throw ContractError("SBM needs an even node count >= 2");
  if (!(params.p >= 0.0 && params.p <= 1.0) || !(params.r >= 0.0 && params.r <= 1.0))
    throw ContractError("SBM probabilities must lie in [0, 1]");
  const std::size_t half = n / 2;
  Rng rng(params.seed);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = (i < half) == (j < half);
      const double prob = same ? params.r : params.p;
      if (rng.uniform() < prob) edges.push_back({i, j, 1.0});
    }
  }
  Eigen::MatrixXd labels(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) labels(static_cast<Eigen::Index>(i), 0) = i < half ? 0.0 : 1.0;
  return {Graph::from_edges(n, edges), SignalField(std::move(labels), {"community"})};
}

}  // namespace ginr
