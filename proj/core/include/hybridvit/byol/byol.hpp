#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "hybridvit/augment/pipeline.hpp"
#include "hybridvit/backbone/resnet.hpp"
#include "hybridvit/byol/loss.hpp"
#include "hybridvit/byol/mlp_head.hpp"
#include "hybridvit/nn/adamw.hpp"

namespace hybridvit::byol {

enum class TauSchedule { constant, cosine };

struct ByolConfig {
  backbone::BackboneConfig backbone;
  int64_t hidden_dim = 512;
  int64_t proj_dim = 64;
  double slope = 0.01;
  double tau = 0.99;
  TauSchedule tau_schedule = TauSchedule::constant;
  double lr = 1e-4;
  double weight_decay = 5e-2;

  bool operator==(const ByolConfig&) const = default;
};

nlohmann::json to_json(const ByolConfig& c);
ByolConfig byol_config_from_json(const nlohmann::json& j);

/// τ for step k of K total steps: constant, or 1 - (1 - τ)(cos(πk/K) + 1)/2.
double tau_at(const ByolConfig& config, int64_t step, int64_t total_steps);

/// Backbone followed by a projector, with a predictor on the online side.
class BranchImpl : public torch::nn::Module {
 public:
  BranchImpl(const ByolConfig& config, bool with_predictor, std::uint64_t init_seed);

  /// Projection z, or prediction q when the branch has a predictor.
  torch::Tensor forward(const torch::Tensor& images);

  backbone::Backbone backbone{nullptr};
  MlpHead projector{nullptr};
  MlpHead predictor{nullptr};
};
TORCH_MODULE(Branch);

/// Online and target networks. The target starts as a copy of the online
/// backbone and projector and never requires gradients.
class ByolNetworkImpl : public torch::nn::Module {
 public:
  ByolNetworkImpl(const ByolConfig& config, std::uint64_t init_seed);

  /// Symmetrized loss for one pair of view batches, mean over the batch.
  torch::Tensor loss(const torch::Tensor& view1, const torch::Tensor& view2);

  /// Online parameters that have a counterpart in the target, paired by name.
  std::vector<torch::Tensor> online_shared_parameters() const;
  std::vector<torch::Tensor> target_parameters() const;

  Branch online{nullptr};
  Branch target{nullptr};
};
TORCH_MODULE(ByolNetwork);

/// θ' <- τ θ' + (1 - τ) θ for each paired tensor.
void ema_update(std::span<const torch::Tensor> online, std::span<torch::Tensor> target, double tau);

/// Everything needed to continue pretraining.
struct ByolState {
  ByolState(ByolConfig config, std::uint64_t init_seed);

  ByolConfig config;
  ByolNetwork network{nullptr};
  std::unique_ptr<nn::AdamW> optimizer;
  int64_t step = 0;
  int epoch = 0;
  double tau = 0.99;
  /// Normalization the pretraining views ended with, if any; downstream
  /// consumers of the backbone apply the same one.
  std::optional<data::Normalization> input_normalization;
};

struct StepResult {
  double loss;
  double tau;
};

/// One optimization step on a batch of source images. Two views per image
/// are drawn from `rng`; online parameters take an AdamW step and the
/// target then moves by EMA with the given τ.
StepResult byol_step(ByolState& state, std::span<const data::ImageTensor> batch,
                     const augment::AugSpec& aug, RngStream& rng, double tau,
                     long batch_index = 0);

/// Stacks both view sets for a batch, in sample order.
std::pair<torch::Tensor, torch::Tensor> make_views(std::span<const data::ImageTensor> batch,
                                                   const augment::AugSpec& aug, RngStream& rng);

/// Normalization constants of the pipeline's Normalize step, if it has one.
std::optional<data::Normalization> pipeline_normalization(const augment::AugSpec& aug);

}  // namespace hybridvit::byol
