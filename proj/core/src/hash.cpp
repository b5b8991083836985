#include "hybridvit/hash.hpp"

#include <cstdio>

namespace hybridvit {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (char ch : bytes) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
  return h;
}

std::string config_hash(const nlohmann::json& config) {
  // nlohmann::json stores objects in a std::map, so dump() is already key-sorted.
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

}  // namespace hybridvit
