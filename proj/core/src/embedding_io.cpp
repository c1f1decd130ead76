#include <fstream>
#include <vector>

#include "ginr/binary.hpp"
#include "ginr/error.hpp"
#include "ginr/spectral.hpp"

namespace ginr {

namespace {
constexpr std::uint32_t kEmbeddingVersion = 1;
}

void save_embedding(const SpectralEmbedding& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write("GEMB", 4);
  binary::write<std::uint32_t>(out, kEmbeddingVersion);
  binary::write<std::uint64_t>(out, emb.n());
  binary::write<std::uint64_t>(out, emb.k());
  binary::write<std::uint64_t>(out, emb.graph_hash);
  binary::write_doubles(out, std::span<const double>(emb.eigenvalues.data(), emb.k()));
  std::vector<double> rows(emb.n() * emb.k());
  for (std::size_t i = 0; i < emb.n(); ++i)
    for (std::size_t c = 0; c < emb.k(); ++c)
      rows[i * emb.k() + c] = emb.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  binary::write_doubles(out, rows);
  if (!out) throw Error("write failed for " + path.string());
}

SpectralEmbedding load_embedding(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  binary::expect_magic(in, "GEMB");
  const auto version = binary::read<std::uint32_t>(in, "version");
  if (version != kEmbeddingVersion) throw ParseError("unsupported GEMB version " + std::to_string(version));
  const auto n = binary::read<std::uint64_t>(in, "node count");
  const auto k = binary::read<std::uint64_t>(in, "embedding width");
  SpectralEmbedding emb;
  emb.graph_hash = binary::read<std::uint64_t>(in, "graph hash");
  emb.eigenvalues.resize(static_cast<Eigen::Index>(k));
  binary::read_doubles(in, std::span<double>(emb.eigenvalues.data(), k), "eigenvalues");
  std::vector<double> rows(n * k);
  binary::read_doubles(in, rows, "embedding");
  emb.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c)
      emb.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i * k + c];
  return emb;
}

}  // namespace ginr
