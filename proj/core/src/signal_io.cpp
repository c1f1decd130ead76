#include <cmath>
#include <fstream>
#include <sstream>

#include "ginr/binary.hpp"
#include "ginr/error.hpp"
#include "ginr/io.hpp"
#include "text_util.hpp"

namespace ginr {

namespace {

constexpr std::uint32_t kSignalVersion = 1;

SignalField read_binary_signal(std::istream& in) {
  binary::expect_magic(in, "GSIG");
  const auto version = binary::read<std::uint32_t>(in, "version");
  if (version != kSignalVersion) throw ParseError("unsupported GSIG version " + std::to_string(version));
  const auto n = binary::read<std::uint64_t>(in, "row count");
  const auto p = binary::read<std::uint64_t>(in, "column count");
  std::vector<double> data(n * p);
  binary::read_doubles(in, data, "signal values");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t c = 0; c < p; ++c)
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = data[i * p + c];
  return SignalField(std::move(values));
}

SignalField parse_csv_signal(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> header;
  std::size_t line_no = 0;
  std::istringstream ss(text);
  std::string raw;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty()) continue;
    const auto fields = text::split(line, ',');
    std::vector<double> row;
    row.reserve(fields.size());
    bool numeric = true;
    for (const auto f : fields) {
      const auto v = text::parse_double(f);
      if (!v) {
        numeric = false;
        break;
      }
      row.push_back(*v);
    }
    if (!numeric) {
      if (rows.empty() && header.empty()) {
        for (const auto f : fields) header.emplace_back(f);
        continue;
      }
      throw ParseError("non-numeric CSV entry", line_no);
    }
    for (double v : row)
      if (!std::isfinite(v)) throw ParseError("non-finite signal entry", line_no);
    if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged CSV row", line_no);
    if (!header.empty() && row.size() != header.size()) throw ParseError("row width differs from header", line_no);
    rows.push_back(std::move(row));
  }
  const std::size_t p = rows.empty() ? header.size() : rows.front().size();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < p; ++c) values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return SignalField(std::move(values), std::move(header));
}

}  // namespace

SignalField load_signal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  const bool is_binary = in.gcount() == 4 && std::string_view(magic, 4) == "GSIG";
  in.clear();
  in.seekg(0);
  SignalField field;
  if (is_binary) {
    field = read_binary_signal(in);
  } else {
    std::ostringstream ss;
    ss << in.rdbuf();
    field = parse_csv_signal(ss.str());
  }
  if (!field.values.allFinite()) throw ParseError("non-finite signal entry in " + path.string());
  return field;
}

SignalField load_signal(const std::filesystem::path& path, std::size_t n) {
  SignalField field = load_signal(path);
  if (field.rows() != n)
    throw ContractError(path.string() + ": signal has " + std::to_string(field.rows()) + " rows, graph has " +
                        std::to_string(n) + " nodes");
  field.check(n);
  return field;
}

void save_signal(const SignalField& field, const std::filesystem::path& path, SignalFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  const auto n = static_cast<std::uint64_t>(field.rows());
  const auto p = static_cast<std::uint64_t>(field.channels());
  if (format == SignalFormat::binary) {
    out.write("GSIG", 4);
    binary::write<std::uint32_t>(out, kSignalVersion);
    binary::write<std::uint64_t>(out, n);
    binary::write<std::uint64_t>(out, p);
    std::vector<double> data(n * p);
    for (std::uint64_t i = 0; i < n; ++i)
      for (std::uint64_t c = 0; c < p; ++c)
        data[i * p + c] = field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
    binary::write_doubles(out, data);
    return;
  }
  if (!field.channel_names.empty()) {
    for (std::size_t c = 0; c < field.channel_names.size(); ++c) out << (c ? "," : "") << field.channel_names[c];
    out << '\n';
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::uint64_t c = 0; c < p; ++c)
      out << (c ? "," : "")
          << text::format_double(field.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)));
    out << '\n';
  }
}

void save_signal(const SignalField& field, const std::filesystem::path& path) {
  save_signal(field, path, path.extension() == ".gsig" ? SignalFormat::binary : SignalFormat::csv);
}

}  // namespace ginr
