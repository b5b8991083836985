#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "hybridvit/nn/state.hpp"

namespace hybridvit::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// In-memory form of a checkpoint container.
struct Checkpoint {
  std::string kind;         // "byol", "classifier", ...
  std::string config_hash;  // must match on load when the caller asks
  nlohmann::json meta = nlohmann::json::object();
  nn::NamedTensors tensors;

  const torch::Tensor& tensor(const std::string& name) const;
  /// Tensors whose name starts with `prefix`, prefix stripped.
  nn::NamedTensors with_prefix(const std::string& prefix) const;
};

/// Serializes to the container layout:
///   "HVITCKPT" | u32 version | u64 header length | header JSON |
///   tensor payloads (contiguous, little-endian) | u32 CRC-32 of all prior bytes
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes,
                             const std::optional<std::string>& expected_hash = std::nullopt);

/// Writes atomically (temp file + rename).
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_hash = std::nullopt);

}  // namespace hybridvit::train
