#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "hybridvit/byol/byol.hpp"
#include "hybridvit/data/dataset.hpp"
#include "hybridvit/nn/classifier.hpp"
#include "hybridvit/train/checkpoint.hpp"
#include "hybridvit/train/metrics.hpp"

namespace hybridvit::train {

struct TrainHp {
  double lr = 1e-4;
  double weight_decay = 5e-2;
  int batch_size = 128;
  int epochs = 100;
  std::string aug = "aug_3";
  std::uint64_t seed = 0;
  double label_smoothing = 0.0;
  /// Stratified share of the labeled set held out for model selection;
  /// 0 trains on everything and keeps the final weights.
  double val_fraction = 0.1;
  /// Stop once an epoch's train top-1 reaches this value.
  std::optional<double> stop_at_train_top1;
  /// Checkpoint every this many epochs into checkpoint_dir (0 = never).
  int save_every = 0;
  std::filesystem::path checkpoint_dir;

  void validate() const;
};

nlohmann::json to_json(const TrainHp& hp);

struct EvalResult {
  double top1 = 0.0;
  double loss = 0.0;
};

/// Argmax accuracy (ties go to the lowest class index) and mean
/// cross-entropy. Runs in eval mode without gradients and restores the
/// model's training flag.
EvalResult evaluate(nn::ClassifierBase& model, const data::Dataset& dataset, int batch_size = 128);

/// Index of the largest logit per row, lowest index on ties.
torch::Tensor argmax_lowest(const torch::Tensor& logits);

struct TrainHooks {
  std::function<void(int64_t step, double loss)> on_step;
  std::function<void(const MetricsRecord&)> on_record;
};

struct FinetuneResult {
  MetricsHistory history;
  /// Epoch whose weights the model holds on return (0 when untrained).
  int best_epoch = 0;
  std::optional<double> best_val_top1;
};

/// Supervised cross-entropy training of every parameter that requires
/// gradients. With a validation split the weights of the best validation
/// epoch are restored at the end. All randomness derives from hp.seed.
FinetuneResult finetune(nn::ClassifierBase& model, const data::Dataset& labeled, const TrainHp& hp,
                        const TrainHooks& hooks = {}, const std::filesystem::path& resume_from = {});

/// ConvNet fine-tune from a BYOL backbone frozen through `tap`
/// (std::nullopt trains the copied backbone end to end).
FinetuneResult finetune_supervised_convnet(const byol::ByolState& state, std::optional<backbone::TapPoint> tap,
                                           const data::Dataset& labeled, const TrainHp& hp,
                                           std::uint64_t init_seed, const TrainHooks& hooks = {});

inline constexpr const char* kClassifierCheckpointKind = "classifier";

/// Model weights in the checkpoint container.
void save_model(const torch::nn::Module& model, const std::filesystem::path& path,
                const nlohmann::json& config, const std::string& config_hash);
/// Loads weights saved by save_model into an identically built model.
void load_model(torch::nn::Module& model, const std::filesystem::path& path,
                const std::optional<std::string>& expected_hash = std::nullopt);

}  // namespace hybridvit::train
