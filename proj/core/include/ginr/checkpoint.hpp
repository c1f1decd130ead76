#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "ginr/mlp.hpp"

namespace ginr {

struct Checkpoint {
  MLPModel model;
  std::optional<LatentTable> latents;
  /// Free-form numeric metadata (e.g. the time normalization range of a conditional model).
  std::map<std::string, double> metadata;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "GINR", u32 version, u64 header length, UTF-8 JSON header (config, metadata, tensor
/// manifest with names and shapes), then the tensors as little-endian f64 in manifest order.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ginr
