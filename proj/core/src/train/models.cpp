#include "hybridvit/train/models.hpp"

#include "hybridvit/data/batch.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/nn/layers.hpp"
#include "hybridvit/nn/state.hpp"

namespace hybridvit::train {

ConvNetClassifierImpl::ConvNetClassifierImpl(backbone::BackboneConfig config, int64_t num_classes,
                                             std::uint64_t init_seed)
    : num_classes_(num_classes) {
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  backbone = register_module("backbone", backbone::Backbone(config, init_seed));
  fc = register_module("fc", torch::nn::Linear(backbone->feature_dim(), num_classes));
  auto gen = nn::make_generator(init_seed ^ 0xfc);
  nn::linear_default_(fc, gen);
}

torch::Tensor ConvNetClassifierImpl::forward(const torch::Tensor& images) {
  auto x = input_normalization ? data::normalize_batch(images, *input_normalization) : images;
  return fc->forward(backbone->forward_pooled(x));
}

ConvNetClassifier convnet_from_byol(const byol::ByolState& state, std::optional<backbone::TapPoint> freeze,
                                    int64_t num_classes, std::uint64_t init_seed) {
  ConvNetClassifier model(state.config.backbone, num_classes, init_seed);
  nn::copy_state(*state.network->online->backbone, *model->backbone);
  model->input_normalization = state.input_normalization;
  backbone::freeze_through(model->backbone, freeze);
  return model;
}

HybridModelImpl::HybridModelImpl(backbone::BackboneConfig extractor_config, backbone::TapPoint tap,
                                 transformers::TransformerConfig head_config, std::uint64_t init_seed)
    : tap_(tap) {
  extractor = register_module("extractor", backbone::Backbone(extractor_config, init_seed));
  head = register_module("head", transformers::TransformerClassifier(head_config, init_seed ^ 0x4ead));
  backbone::freeze_through(extractor, backbone::TapPoint::layer4);
}

torch::Tensor HybridModelImpl::features(const torch::Tensor& images) {
  torch::NoGradGuard guard;
  auto x = input_normalization ? data::normalize_batch(images, *input_normalization) : images;
  return extractor->forward_to(x, tap_);
}

torch::Tensor HybridModelImpl::forward(const torch::Tensor& images) { return head->forward(features(images)); }

transformers::TransformerConfig hybrid_head_config(const backbone::BackboneConfig& extractor,
                                                   backbone::TapPoint tap, int input_hw,
                                                   transformers::TransformerConfig base) {
  const auto shape = backbone::feature_shape(extractor, tap, input_hw);
  base.in_channels = shape.channels;
  base.in_height = shape.height;
  base.in_width = shape.width;
  return base;
}

HybridModel attach_frontend(const byol::ByolState& state, backbone::TapPoint tap,
                            const transformers::TransformerConfig& head_config, int input_hw,
                            std::uint64_t init_seed) {
  const auto shape = backbone::feature_shape(state.config.backbone, tap, input_hw);
  if (head_config.in_channels != shape.channels || head_config.in_height != shape.height ||
      head_config.in_width != shape.width) {
    throw ShapeError("head expects " + std::to_string(head_config.in_channels) + "x" +
                     std::to_string(head_config.in_height) + "x" + std::to_string(head_config.in_width) +
                     " input but " + std::string(backbone::to_string(tap)) + " yields " +
                     std::to_string(shape.channels) + "x" + std::to_string(shape.height) + "x" +
                     std::to_string(shape.width));
  }
  HybridModel model(state.config.backbone, tap, head_config, init_seed);
  nn::copy_state(*state.network->online->backbone, *model->extractor);
  model->input_normalization = state.input_normalization;
  return model;
}

}  // namespace hybridvit::train
