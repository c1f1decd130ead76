#pragma once

#include <filesystem>
#include <string>

#include "ginr/graph.hpp"

namespace ginr {

/// Triangle mesh in the OBJ subset: `v x y z` and `f a b c` records with 1-based indices.
/// `/vt/vn` suffixes on face entries are ignored, as are blank and `#` lines. Any other
/// record, a non-triangular face, or a dangling index is a ParseError with its line number.
Graph load_mesh(const std::filesystem::path& path);
Graph parse_mesh(const std::string& text);

/// Writes positions and faces as OBJ.
void save_mesh(const Graph& g, const std::filesystem::path& path);

/// Whitespace-separated `u v [w]` lines (0-based ids, default weight 1); `#` starts a
/// comment. The node count is one past the largest id.
Graph load_edge_list(const std::filesystem::path& path);
Graph parse_edge_list(const std::string& text);

/// Loads a mesh (.obj) or an edge list (anything else), or builds a generated graph from
/// a spec: "path:N", "icosphere:S", "sbm:N:P:R:SEED".
Graph load_graph(const std::string& source);

enum class SignalFormat { csv, binary };

/// Reads CSV (one row per node, comma separated, optional non-numeric header line) or the
/// binary GSIG format, detected by the magic bytes. Throws unless the row count equals n.
SignalField load_signal(const std::filesystem::path& path, std::size_t n);
/// Reads without a row-count check.
SignalField load_signal(const std::filesystem::path& path);

/// Binary layout: "GSIG", u32 version = 1, u64 n, u64 p, n*p little-endian f64 row-major.
/// CSV values are written in shortest round-trip form.
void save_signal(const SignalField& field, const std::filesystem::path& path, SignalFormat format);
/// Format chosen by extension: ".gsig" is binary, anything else CSV.
void save_signal(const SignalField& field, const std::filesystem::path& path);

/// ASCII PLY with vertex positions, faces when present, and one float property per signal
/// channel. Requires positions.
void export_ply(const Graph& g, const SignalField& signal, const std::filesystem::path& path);

}  // namespace ginr
