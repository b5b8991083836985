#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>

namespace hybridvit {

/// Seeded random stream used everywhere randomness enters the pipeline.
///
/// Streams are splittable: `derive(seed, {epoch, index})` gives an
/// independent stream that depends only on its keys, so work can be handed
/// to any number of producers without changing the drawn values.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed = 0);

  static RngStream derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  std::uint64_t next_u64() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  std::string state() const;
  void set_state(const std::string& state);

  bool operator==(const RngStream& other) const { return engine_ == other.engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer; also used for hashing small integer tuples.
std::uint64_t mix64(std::uint64_t x);

}  // namespace hybridvit
