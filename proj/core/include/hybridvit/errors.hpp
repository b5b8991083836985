#pragma once

#include <stdexcept>
#include <string>

namespace hybridvit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A binary record does not have the expected layout or size.
class MalformedRecord : public Error {
 public:
  using Error::Error;
};

/// A configuration value, name or key is invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor or model shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Training produced a NaN/Inf loss.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& what, long batch_index, unsigned long long seed)
      : Error(what), batch_index_(batch_index), seed_(seed) {}

  long batch_index() const noexcept { return batch_index_; }
  unsigned long long seed() const noexcept { return seed_; }

 private:
  long batch_index_;
  unsigned long long seed_;
};

/// Checkpoint container is unreadable, corrupt, or was written for a different config.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace hybridvit
