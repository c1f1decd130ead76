#include <algorithm>
#include <fstream>
#include <sstream>

#include "ginr/error.hpp"
#include "ginr/io.hpp"
#include "text_util.hpp"

namespace ginr {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <class Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    ++line_no;
    std::string_view line(text.data() + start, (end == std::string::npos ? text.size() : end) - start);
    fn(line, line_no);
    if (end == std::string::npos) break;
    start = end + 1;
  }
}

}  // namespace

Graph parse_mesh(const std::string& text) {
  std::vector<Vec3> positions;
  struct PendingFace {
    std::array<long long, 3> idx;
    std::size_t line;
  };
  std::vector<PendingFace> pending;

  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') return;
    const auto tok = text::split_ws(line);
    if (tok[0] == "v") {
      if (tok.size() < 4 || tok.size() > 5) throw ParseError("vertex record needs 3 coordinates", line_no);
      Vec3 p{};
      for (std::size_t c = 0; c < 3; ++c) {
        const auto v = text::parse_double(tok[c + 1]);
        if (!v) throw ParseError("bad coordinate '" + std::string(tok[c + 1]) + "'", line_no);
        p[c] = *v;
      }
      positions.push_back(p);
    } else if (tok[0] == "f") {
      if (tok.size() != 4)
        throw ParseError("non-triangle face with " + std::to_string(tok.size() - 1) + " vertices", line_no);
      PendingFace f{{}, line_no};
      for (std::size_t c = 0; c < 3; ++c) {
        const auto head = tok[c + 1].substr(0, tok[c + 1].find('/'));
        const auto v = text::parse_int(head);
        if (!v) throw ParseError("bad face index '" + std::string(tok[c + 1]) + "'", line_no);
        f.idx[c] = *v;
      }
      pending.push_back(f);
    } else {
      throw ParseError("unsupported record '" + std::string(tok[0]) + "'", line_no);
    }
  });

  std::vector<Face> faces;
  faces.reserve(pending.size());
  for (const auto& f : pending) {
    Face face{};
    for (std::size_t c = 0; c < 3; ++c) {
      if (f.idx[c] < 1 || static_cast<std::size_t>(f.idx[c]) > positions.size())
        throw ParseError("dangling vertex index " + std::to_string(f.idx[c]), f.line);
      face[c] = static_cast<std::size_t>(f.idx[c] - 1);
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw ParseError("degenerate face", f.line);
    faces.push_back(face);
  }
  return Graph::from_mesh(std::move(positions), std::move(faces));
}

Graph load_mesh(const std::filesystem::path& path) { return parse_mesh(read_file(path)); }

void save_mesh(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  for (const auto& p : g.positions())
    out << "v " << text::format_double(p[0]) << ' ' << text::format_double(p[1]) << ' ' << text::format_double(p[2])
        << '\n';
  for (const auto& f : g.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

Graph parse_edge_list(const std::string& text) {
  std::vector<Edge> edges;
  std::size_t n = 0;
  for_each_line(text, [&](std::string_view raw, std::size_t line_no) {
    const auto hash = raw.find('#');
    const auto line = text::trim(raw.substr(0, hash));
    if (line.empty()) return;
    const auto tok = text::split_ws(line);
    if (tok.size() < 2 || tok.size() > 3) throw ParseError("expected 'u v [w]'", line_no);
    const auto u = text::parse_int(tok[0]);
    const auto v = text::parse_int(tok[1]);
    if (!u || !v || *u < 0 || *v < 0) throw ParseError("bad node id", line_no);
    double w = 1.0;
    if (tok.size() == 3) {
      const auto parsed = text::parse_double(tok[2]);
      if (!parsed) throw ParseError("bad weight '" + std::string(tok[2]) + "'", line_no);
      w = *parsed;
    }
    if (w < 0.0) throw ParseError("negative weight", line_no);
    if (!(w > 0.0)) throw ParseError("zero or non-finite weight", line_no);
    if (*u == *v) throw ParseError("self-loop on node " + std::to_string(*u), line_no);
    edges.push_back({static_cast<std::size_t>(*u), static_cast<std::size_t>(*v), w});
    n = std::max(n, static_cast<std::size_t>(std::max(*u, *v)) + 1);
  });
  try {
    return Graph::from_edges(n, edges);
  } catch (const ContractError& e) {
    throw ParseError(e.what());
  }
}

Graph load_edge_list(const std::filesystem::path& path) { return parse_edge_list(read_file(path)); }

Graph load_graph(const std::string& source) {
  const auto parts = text::split(source, ':');
  auto as_size = [&](std::size_t i) {
    const auto v = i < parts.size() ? text::parse_int(parts[i]) : std::nullopt;
    if (!v || *v < 0) throw ContractError("bad graph spec '" + source + "'");
    return static_cast<std::size_t>(*v);
  };
  auto as_double = [&](std::size_t i) {
    const auto v = i < parts.size() ? text::parse_double(parts[i]) : std::nullopt;
    if (!v) throw ContractError("bad graph spec '" + source + "'");
    return *v;
  };
  if (parts.size() >= 2 && parts[0] == "path") return generate_path(as_size(1));
  if (parts.size() >= 2 && parts[0] == "icosphere") return generate_icosphere(as_size(1));
  if (parts.size() == 5 && parts[0] == "sbm")
    return generate_sbm({as_size(1), as_double(2), as_double(3), as_size(4)}).first;
  const std::filesystem::path path(source);
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (ext == ".obj") return load_mesh(path);
  return load_edge_list(path);
}

void export_ply(const Graph& g, const SignalField& signal, const std::filesystem::path& path) {
  if (!g.has_positions()) throw ContractError("export_ply: graph has no vertex positions");
  signal.check(g.num_nodes());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  const auto& pos = g.positions();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << g.num_nodes() << '\n';
  out << "property double x\nproperty double y\nproperty double z\n";
  for (std::size_t c = 0; c < signal.channels(); ++c) {
    std::string name = c < signal.channel_names.size() && !signal.channel_names[c].empty()
                           ? signal.channel_names[c]
                           : (signal.channels() == 1 ? std::string("value") : "value" + std::to_string(c));
    std::replace(name.begin(), name.end(), ' ', '_');
    out << "property double " << name << '\n';
  }
  const std::size_t face_count = g.has_faces() ? g.faces().size() : 0;
  out << "element face " << face_count << '\n';
  out << "property list uchar int vertex_indices\nend_header\n";
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    out << text::format_double(pos[i][0]) << ' ' << text::format_double(pos[i][1]) << ' '
        << text::format_double(pos[i][2]);
    for (std::size_t c = 0; c < signal.channels(); ++c)
      out << ' ' << text::format_double(signal.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    out << '\n';
  }
  if (g.has_faces())
    for (const auto& f : g.faces()) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

}  // namespace ginr
