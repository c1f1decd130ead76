#include "ginr/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ginr/binary.hpp"
#include "ginr/error.hpp"

namespace ginr {

using json = nlohmann::json;

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  MLPModel model = checkpoint.model;
  const MLPConfig& cfg = model.config();
  auto tensors = model.tensors();
  if (checkpoint.latents) {
    auto& z = const_cast<Eigen::MatrixXd&>(checkpoint.latents->z);
    tensors.push_back({"latents", std::span<double>(z.data(), static_cast<std::size_t>(z.size())),
                       {checkpoint.latents->size(), checkpoint.latents->dim()}});
  }

  json header;
  header["config"] = {{"input_dim", cfg.input_dim},   {"cond_dim", cfg.cond_dim},
                      {"output_dim", cfg.output_dim}, {"depth", cfg.depth},
                      {"width", cfg.width},           {"activation", std::string(to_string(cfg.activation))},
                      {"omega0", cfg.omega0},         {"init_seed", cfg.init_seed}};
  header["config"]["skip_layer"] = cfg.skip_layer ? json(*cfg.skip_layer) : json(nullptr);
  header["layout"] = "column-major";
  header["metadata"] = checkpoint.metadata;
  header["tensors"] = json::array();
  for (const auto& t : tensors) header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write("GINR", 4);
  binary::write<std::uint32_t>(out, kCheckpointVersion);
  binary::write<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : tensors) binary::write_doubles(out, t.values);
  if (!out) throw Error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  binary::expect_magic(in, "GINR");
  const auto version = binary::read<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw ParseError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kCheckpointVersion) + ")");
  const auto length = binary::read<std::uint64_t>(in, "header length");
  if (length > (std::uint64_t{1} << 30)) throw ParseError("checkpoint header too large");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) throw ParseError("truncated checkpoint header");

  json header;
  try {
    header = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  Checkpoint cp;
  std::vector<Layer> layers;
  try {
    const auto& c = header.at("config");
    MLPConfig cfg;
    cfg.input_dim = c.at("input_dim").get<std::size_t>();
    cfg.cond_dim = c.at("cond_dim").get<std::size_t>();
    cfg.output_dim = c.at("output_dim").get<std::size_t>();
    cfg.depth = c.at("depth").get<std::size_t>();
    cfg.width = c.at("width").get<std::size_t>();
    cfg.activation = parse_activation(c.at("activation").get<std::string>());
    cfg.omega0 = c.at("omega0").get<double>();
    cfg.init_seed = c.at("init_seed").get<std::uint64_t>();
    if (c.at("skip_layer").is_null())
      cfg.skip_layer.reset();
    else
      cfg.skip_layer = c.at("skip_layer").get<std::size_t>();
    cfg.validate();
    if (header.contains("metadata")) cp.metadata = header.at("metadata").get<std::map<std::string, double>>();

    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      std::size_t count = 1;
      for (auto s : shape) count *= s;
      std::vector<double> data(count);
      binary::read_doubles(in, data, name.c_str());
      if (name == "latents") {
        if (shape.size() != 2) throw ParseError("latent tensor must be 2-D");
        LatentTable z;
        z.z = Eigen::Map<Eigen::MatrixXd>(data.data(), static_cast<Eigen::Index>(shape[0]),
                                          static_cast<Eigen::Index>(shape[1]));
        cp.latents = std::move(z);
      } else if (name.ends_with(".weight")) {
        if (shape.size() != 2) throw ParseError("weight tensor " + name + " must be 2-D");
        layers.push_back({Eigen::Map<Eigen::MatrixXd>(data.data(), static_cast<Eigen::Index>(shape[0]),
                                                      static_cast<Eigen::Index>(shape[1])),
                          {}});
      } else if (name.ends_with(".bias")) {
        if (layers.empty() || shape.size() != 1) throw ParseError("misplaced bias tensor " + name);
        layers.back().bias = Eigen::Map<Eigen::VectorXd>(data.data(), static_cast<Eigen::Index>(shape[0]));
      } else {
        throw ParseError("unknown tensor " + name);
      }
    }
    cp.model = MLPModel::from_layers(cfg, std::move(layers));
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint header: ") + e.what());
  }
  return cp;
}

}  // namespace ginr
