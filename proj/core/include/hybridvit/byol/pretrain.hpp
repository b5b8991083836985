#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "hybridvit/byol/byol.hpp"
#include "hybridvit/data/dataset.hpp"
#include "hybridvit/train/checkpoint.hpp"
#include "hybridvit/train/metrics.hpp"

namespace hybridvit::byol {

struct PretrainConfig {
  ByolConfig model;
  std::string aug = "data_aug_5";
  int epochs = 50;
  int batch_size = 16;
  /// Write a checkpoint every this many epochs (0 = only at the end, when a
  /// directory is set).
  int save_every = 0;
  std::filesystem::path checkpoint_dir;
};

nlohmann::json to_json(const PretrainConfig& c);

struct PretrainHooks {
  std::function<void(int64_t step, double loss)> on_step;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct PretrainResult {
  std::unique_ptr<ByolState> state;
  train::MetricsHistory history;
};

/// Self-supervised pretraining. Every random draw depends only on `seed`,
/// the epoch and the batch index, so a run resumed from a checkpoint
/// reproduces an uninterrupted run bit for bit. Final short batches of a
/// single image are dropped (batch statistics need two samples).
PretrainResult pretrain(const data::Dataset& unlabeled, const PretrainConfig& config,
                        std::uint64_t seed, const PretrainHooks& hooks = {},
                        const std::filesystem::path& resume_from = {});

/// Checkpoint of the full pretraining state.
train::Checkpoint save_state(const ByolState& state, const train::MetricsHistory& history,
                             std::uint64_t seed, const std::string& config_hash);
/// Rebuilds a state from a checkpoint written by save_state.
std::unique_ptr<ByolState> load_state(const train::Checkpoint& ckpt,
                                      train::MetricsHistory* history = nullptr);

inline constexpr const char* kByolCheckpointKind = "byol";

}  // namespace hybridvit::byol
