#pragma once

#include <cstdint>
#include <optional>

#include <torch/torch.h>

#include "hybridvit/backbone/resnet.hpp"
#include "hybridvit/byol/byol.hpp"
#include "hybridvit/data/image.hpp"
#include "hybridvit/nn/classifier.hpp"
#include "hybridvit/transformers/classifier.hpp"

namespace hybridvit::train {

/// Backbone, global average pooling and a linear classifier.
class ConvNetClassifierImpl : public nn::ClassifierBase {
 public:
  ConvNetClassifierImpl(backbone::BackboneConfig config, int64_t num_classes, std::uint64_t init_seed);

  torch::Tensor forward(const torch::Tensor& images) override;
  int64_t num_classes() const override { return num_classes_; }

  backbone::Backbone backbone{nullptr};
  torch::nn::Linear fc{nullptr};
  /// Applied to the input batch before the backbone when set.
  std::optional<data::Normalization> input_normalization;

 private:
  int64_t num_classes_;
};
TORCH_MODULE(ConvNetClassifier);

/// ConvNet classifier whose backbone starts from the BYOL online backbone,
/// frozen through `freeze` (nothing frozen when empty).
ConvNetClassifier convnet_from_byol(const byol::ByolState& state, std::optional<backbone::TapPoint> freeze,
                                    int64_t num_classes, std::uint64_t init_seed);

/// Frozen feature extractor up to a tap point followed by a transformer head.
class HybridModelImpl : public nn::ClassifierBase {
 public:
  HybridModelImpl(backbone::BackboneConfig extractor_config, backbone::TapPoint tap,
                  transformers::TransformerConfig head_config, std::uint64_t init_seed);

  torch::Tensor forward(const torch::Tensor& images) override;
  int64_t num_classes() const override { return head->num_classes(); }

  /// Tapped features for a batch; never tracks gradients.
  torch::Tensor features(const torch::Tensor& images);
  backbone::TapPoint tap() const noexcept { return tap_; }

  backbone::Backbone extractor{nullptr};
  transformers::TransformerClassifier head{nullptr};
  std::optional<data::Normalization> input_normalization;

 private:
  backbone::TapPoint tap_;
};
TORCH_MODULE(HybridModel);

/// `base` with its input shape set to the feature map at `tap` for a square
/// input of side input_hw.
transformers::TransformerConfig hybrid_head_config(const backbone::BackboneConfig& extractor,
                                                   backbone::TapPoint tap, int input_hw,
                                                   transformers::TransformerConfig base);

/// Copies the BYOL online backbone into a frozen extractor and attaches a
/// freshly initialized head. ShapeError when the head's input shape does
/// not match feature_shape(backbone, tap, input_hw).
HybridModel attach_frontend(const byol::ByolState& state, backbone::TapPoint tap,
                            const transformers::TransformerConfig& head_config, int input_hw,
                            std::uint64_t init_seed);

}  // namespace hybridvit::train
