#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "ginr/error.hpp"
#include "ginr/graph.hpp"

namespace ginr {

namespace {

double loop_beta(std::size_t valence) {
  const double n = static_cast<double>(valence);
  const double c = 3.0 / 8.0 + 0.25 * std::cos(2.0 * std::numbers::pi / n);
  return (5.0 / 8.0 - c * c) / n;
}

}  // namespace

Graph loop_subdivide(const Graph& g) {
  const auto& faces = g.faces();
  const std::size_t v_count = g.num_nodes();
  const std::vector<Edge> edges = g.edges();

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_id;
  for (std::size_t e = 0; e < edges.size(); ++e) edge_id.emplace(std::make_pair(edges[e].u, edges[e].v), e);
  auto id_of = [&](std::size_t a, std::size_t b) { return edge_id.at(std::minmax(a, b)); };

  // Opposite vertices of each edge, one per incident face.
  std::vector<std::vector<std::size_t>> opposite(edges.size());
  for (const Face& f : faces) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t e = id_of(f[c], f[(c + 1) % 3]);
      opposite[e].push_back(f[(c + 2) % 3]);
      if (opposite[e].size() > 2)
        throw ContractError("non-manifold edge (" + std::to_string(edges[e].u) + ", " + std::to_string(edges[e].v) +
                            ") shared by more than two faces");
    }
  }

  std::optional<std::vector<Vec3>> positions;
  if (g.has_positions()) {
    const auto& pos = g.positions();
    std::vector<Vec3> out(v_count + edges.size());

    // Boundary neighbors per vertex: endpoints of incident edges with a single face.
    std::vector<std::vector<std::size_t>> boundary_nb(v_count);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (opposite[e].size() == 1) {
        boundary_nb[edges[e].u].push_back(edges[e].v);
        boundary_nb[edges[e].v].push_back(edges[e].u);
      }
    }
    for (std::size_t i = 0; i < v_count; ++i) {
      Vec3 p{};
      if (!boundary_nb[i].empty()) {
        if (boundary_nb[i].size() == 2) {
          for (std::size_t c = 0; c < 3; ++c)
            p[c] = 0.75 * pos[i][c] + 0.125 * (pos[boundary_nb[i][0]][c] + pos[boundary_nb[i][1]][c]);
        } else {
          p = pos[i];  // boundary corner of a non-simple boundary: keep in place
        }
      } else {
        const auto nb = g.neighbors(i);
        if (nb.empty()) {
          p = pos[i];
        } else {
          const double beta = loop_beta(nb.size());
          const double self = 1.0 - static_cast<double>(nb.size()) * beta;
          for (std::size_t c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (std::size_t j : nb) sum += pos[j][c];
            p[c] = self * pos[i][c] + beta * sum;
          }
        }
      }
      out[i] = p;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Vec3& a = pos[edges[e].u];
      const Vec3& b = pos[edges[e].v];
      Vec3 p{};
      if (opposite[e].size() == 2) {
        const Vec3& c = pos[opposite[e][0]];
        const Vec3& d = pos[opposite[e][1]];
        for (std::size_t k = 0; k < 3; ++k) p[k] = 0.375 * (a[k] + b[k]) + 0.125 * (c[k] + d[k]);
      } else {
        for (std::size_t k = 0; k < 3; ++k) p[k] = 0.5 * (a[k] + b[k]);
      }
      out[v_count + e] = p;
    }
    positions = std::move(out);
  }

  std::vector<Face> new_faces;
  new_faces.reserve(4 * faces.size());
  for (const Face& f : faces) {
    const std::size_t ab = v_count + id_of(f[0], f[1]);
    const std::size_t bc = v_count + id_of(f[1], f[2]);
    const std::size_t ca = v_count + id_of(f[2], f[0]);
    new_faces.push_back({f[0], ab, ca});
    new_faces.push_back({f[1], bc, ab});
    new_faces.push_back({f[2], ca, bc});
    new_faces.push_back({ab, bc, ca});
  }

  const std::size_t n = v_count + edges.size();
  std::vector<Edge> new_edges;
  new_edges.reserve(3 * new_faces.size());
  for (const Face& f : new_faces)
    for (std::size_t c = 0; c < 3; ++c) new_edges.push_back({std::min(f[c], f[(c + 1) % 3]), std::max(f[c], f[(c + 1) % 3]), 1.0});
  // Isolated original edges (not on any face) still split through their midpoint.
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (opposite[e].empty()) {
      new_edges.push_back({edges[e].u, v_count + e, 1.0});
      new_edges.push_back({edges[e].v, v_count + e, 1.0});
    }
  }
  if (!positions) {
    return Graph::from_edges(n, new_edges, std::nullopt, std::move(new_faces));
  }
  return Graph::from_edges(n, new_edges, std::move(positions), std::move(new_faces));
}

}  // namespace ginr
