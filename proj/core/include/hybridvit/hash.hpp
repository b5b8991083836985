#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace hybridvit {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// 16 hex digits of FNV-1a over the canonical (sorted-key, compact) dump,
/// so two configs that differ only in key order hash the same.
std::string config_hash(const nlohmann::json& config);

}  // namespace hybridvit
