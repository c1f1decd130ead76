#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ginr/graph.hpp"
#include "ginr/rng.hpp"

namespace ginr::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    Rng rng(std::hash<std::string>{}(tag) ^ reinterpret_cast<std::uintptr_t>(this));
    path_ = std::filesystem::temp_directory_path() / ("ginr_" + tag + "_" + std::to_string(rng.next_u64() % 1000000007ULL));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Connected Erdos-Renyi-style graph: a random spanning path plus extra random edges.
inline Graph random_connected_graph(std::size_t n, std::size_t extra_edges, std::uint64_t seed, bool weighted = false) {
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<Edge> edges;
  auto weight = [&] { return weighted ? rng.uniform(0.5, 2.0) : 1.0; };
  for (std::size_t i = 1; i < n; ++i) edges.push_back({order[i - 1], order[i], weight()});
  for (std::size_t e = 0; e < extra_edges; ++e) {
    const std::size_t u = rng.below(n), v = rng.below(n);
    if (u == v) continue;
    bool dup = false;
    for (const auto& x : edges) dup = dup || (x.u == u && x.v == v) || (x.u == v && x.v == u);
    if (!dup) edges.push_back({u, v, weight()});
  }
  return Graph::from_edges(n, edges);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace ginr::testing
