#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "hybridvit/backbone/config.hpp"
#include "hybridvit/nn/layers.hpp"

namespace hybridvit::backbone {

/// One residual block (basic or bottleneck) with an optional projection shortcut.
class ResidualBlockImpl : public torch::nn::Module {
 public:
  ResidualBlockImpl(bool bottleneck, int in, int inner, int out, int stride);

  torch::Tensor forward(const torch::Tensor& x);

  /// BatchNorm layers in this block, including the shortcut's.
  std::vector<nn::BatchNorm> batch_norms() const;
  /// The BN closing the residual branch (zero-initialized on request).
  nn::BatchNorm last_bn() const { return bottleneck_ ? bn3 : bn2; }
  void init_parameters(at::Generator& gen, bool zero_init_residual);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr}, downsample_conv{nullptr};
  nn::BatchNorm bn1{nullptr}, bn2{nullptr}, bn3{nullptr}, downsample_bn{nullptr};

 private:
  bool bottleneck_;
};
TORCH_MODULE(ResidualBlock);

/// 7x7/2 convolution, BN, rectifier and 3x3/2 max-pool.
class StemImpl : public torch::nn::Module {
 public:
  explicit StemImpl(int out);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d conv{nullptr};
  nn::BatchNorm bn{nullptr};
};
TORCH_MODULE(Stem);

/// Residual ConvNet feature extractor with four named tap points.
///
/// Parameter names follow `<stage>.<block>.<layer>.<tensor>` with stages
/// `stem`, `layer1`..`layer4`, e.g. `layer2.0.downsample_bn.running_var`.
class BackboneImpl : public torch::nn::Module {
 public:
  BackboneImpl(BackboneConfig config, std::uint64_t init_seed);

  const BackboneConfig& config() const noexcept { return config_; }

  /// Stem plus stages 1..tap.
  torch::Tensor forward_to(const torch::Tensor& images, TapPoint tap);
  /// Stages after `tap` applied to features produced by forward_to(tap).
  torch::Tensor forward_from(const torch::Tensor& features, TapPoint tap);
  /// Full extractor followed by global average pooling: [N, feature_dim()].
  torch::Tensor forward_pooled(const torch::Tensor& images);

  int64_t feature_dim() const;

  /// Modules making up stage `s` (0 = stem, 1..4 = layer1..layer4).
  std::shared_ptr<torch::nn::Module> stage(int s) const;
  std::vector<nn::BatchNorm> stage_batch_norms(int s) const;

  void init_parameters(std::uint64_t seed);

 private:
  BackboneConfig config_;
  Stem stem_{nullptr};
  std::vector<torch::nn::ModuleList> stages_;
};
TORCH_MODULE(Backbone);

/// Single-image convenience wrapper: [C, H, W] image to [C', H', W'] features.
torch::Tensor forward_to_tap(Backbone& backbone, const torch::Tensor& image_chw, TapPoint tap);

/// Partition of parameter names into frozen and trainable sets.
struct FreezeMask {
  std::vector<std::string> frozen;
  std::vector<std::string> trainable;

  bool is_frozen(const std::string& name) const;
};

/// Freezes the stem and stages 1..tap: parameters stop requiring gradients
/// and their BN layers switch to locked running statistics. Stages after
/// `tap` are made trainable again. `std::nullopt` unfreezes everything.
FreezeMask freeze_through(Backbone& backbone, std::optional<TapPoint> tap);

/// Current mask, derived from requires_grad flags.
FreezeMask freeze_mask(const Backbone& backbone);

}  // namespace hybridvit::backbone
