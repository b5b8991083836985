#include "hybridvit/backbone/resnet.hpp"

#include "hybridvit/errors.hpp"

namespace hybridvit::backbone {

namespace {

torch::nn::Conv2d make_conv(int in, int out, int k, int stride) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(false));
}

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(bool bottleneck, int in, int inner, int out, int stride)
    : bottleneck_(bottleneck) {
  if (bottleneck) {
    conv1 = register_module("conv1", make_conv(in, inner, 1, 1));
    bn1 = register_module("bn1", nn::BatchNorm(inner));
    conv2 = register_module("conv2", make_conv(inner, inner, 3, stride));
    bn2 = register_module("bn2", nn::BatchNorm(inner));
    conv3 = register_module("conv3", make_conv(inner, out, 1, 1));
    bn3 = register_module("bn3", nn::BatchNorm(out));
  } else {
    conv1 = register_module("conv1", make_conv(in, inner, 3, stride));
    bn1 = register_module("bn1", nn::BatchNorm(inner));
    conv2 = register_module("conv2", make_conv(inner, out, 3, 1));
    bn2 = register_module("bn2", nn::BatchNorm(out));
  }
  if (stride != 1 || in != out) {
    downsample_conv = register_module("downsample_conv", make_conv(in, out, 1, stride));
    downsample_bn = register_module("downsample_bn", nn::BatchNorm(out));
  }
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(bn1(conv1(x)));
  if (bottleneck_) {
    y = torch::relu(bn2(conv2(y)));
    y = bn3(conv3(y));
  } else {
    y = bn2(conv2(y));
  }
  auto shortcut = downsample_conv ? downsample_bn(downsample_conv(x)) : x;
  return torch::relu(y + shortcut);
}

std::vector<nn::BatchNorm> ResidualBlockImpl::batch_norms() const {
  std::vector<nn::BatchNorm> out{bn1, bn2};
  if (bn3) out.push_back(bn3);
  if (downsample_bn) out.push_back(downsample_bn);
  return out;
}

void ResidualBlockImpl::init_parameters(at::Generator& gen, bool zero_init_residual) {
  torch::NoGradGuard guard;
  for (auto* c : {&conv1, &conv2, &conv3, &downsample_conv}) {
    if (*c) nn::kaiming_normal_fan_out((*c)->weight, gen);
  }
  for (auto& b : batch_norms()) {
    b->weight.fill_(1.0);
    b->bias.zero_();
    b->running_mean.zero_();
    b->running_var.fill_(1.0);
  }
  if (zero_init_residual) last_bn()->weight.zero_();
}

StemImpl::StemImpl(int out) {
  conv = register_module("conv", make_conv(3, out, 7, 2));
  bn = register_module("bn", nn::BatchNorm(out));
}

torch::Tensor StemImpl::forward(const torch::Tensor& x) {
  auto y = torch::relu(bn(conv(x)));
  return torch::max_pool2d(y, {3, 3}, {2, 2}, {1, 1});
}

BackboneImpl::BackboneImpl(BackboneConfig config, std::uint64_t init_seed)
    : config_(config) {
  const auto lay = layout(config.family);
  const auto w = stage_widths(config);

  // the stem is its own single-block stage so names read stem.0.<layer>
  torch::nn::ModuleList stem_list;
  stem_ = Stem(w.stem);
  stem_list->push_back(stem_);
  register_module("stem", stem_list);

  int in = w.stem;
  for (int s = 0; s < 4; ++s) {
    torch::nn::ModuleList blocks;
    for (int b = 0; b < lay.blocks[s]; ++b) {
      const int stride = (b == 0 && s > 0) ? 2 : 1;
      blocks->push_back(ResidualBlock(lay.bottleneck, b == 0 ? in : w.output[s], w.inner[s],
                                      w.output[s], stride));
    }
    stages_.push_back(register_module("layer" + std::to_string(s + 1), blocks));
    in = w.output[s];
  }
  init_parameters(init_seed);
}

void BackboneImpl::init_parameters(std::uint64_t seed) {
  auto gen = nn::make_generator(seed);
  torch::NoGradGuard guard;
  nn::kaiming_normal_fan_out(stem_->conv->weight, gen);
  stem_->bn->weight.fill_(1.0);
  stem_->bn->bias.zero_();
  stem_->bn->running_mean.zero_();
  stem_->bn->running_var.fill_(1.0);
  for (auto& stage : stages_) {
    for (auto& m : *stage) {
      m->as<ResidualBlockImpl>()->init_parameters(gen, config_.zero_init_residual);
    }
  }
}

torch::Tensor BackboneImpl::forward_to(const torch::Tensor& images, TapPoint tap) {
  if (images.dim() != 4 || images.size(1) != 3) {
    throw ShapeError("backbone expects [N, 3, H, W] input");
  }
  const int input_hw = static_cast<int>(std::min(images.size(2), images.size(3)));
  if (input_hw < tap_stride(tap)) {
    throw ShapeError("input too small for " + std::string(to_string(tap)));
  }
  auto x = stem_->forward(images);
  for (int s = 0; s < stage_index(tap); ++s) {
    for (auto& m : *stages_[s]) x = m->as<ResidualBlockImpl>()->forward(x);
  }
  return x;
}

torch::Tensor BackboneImpl::forward_from(const torch::Tensor& features, TapPoint tap) {
  auto x = features;
  for (int s = stage_index(tap); s < 4; ++s) {
    for (auto& m : *stages_[s]) x = m->as<ResidualBlockImpl>()->forward(x);
  }
  return x;
}

torch::Tensor BackboneImpl::forward_pooled(const torch::Tensor& images) {
  return forward_to(images, TapPoint::layer4).mean({2, 3});
}

int64_t BackboneImpl::feature_dim() const { return stage_widths(config_).output[3]; }

std::shared_ptr<torch::nn::Module> BackboneImpl::stage(int s) const {
  if (s == 0) return stem_.ptr();
  return stages_.at(static_cast<std::size_t>(s - 1)).ptr();
}

std::vector<nn::BatchNorm> BackboneImpl::stage_batch_norms(int s) const {
  if (s == 0) return {stem_->bn};
  std::vector<nn::BatchNorm> out;
  for (const auto& m : *stages_.at(static_cast<std::size_t>(s - 1))) {
    for (auto& b : m->as<ResidualBlockImpl>()->batch_norms()) out.push_back(b);
  }
  return out;
}

torch::Tensor forward_to_tap(Backbone& backbone, const torch::Tensor& image_chw, TapPoint tap) {
  if (image_chw.dim() != 3) throw ShapeError("forward_to_tap expects a [C, H, W] image");
  return backbone->forward_to(image_chw.unsqueeze(0), tap).squeeze(0);
}

bool FreezeMask::is_frozen(const std::string& name) const {
  return std::find(frozen.begin(), frozen.end(), name) != frozen.end();
}

FreezeMask freeze_through(Backbone& backbone, std::optional<TapPoint> tap) {
  const int through = tap ? stage_index(*tap) : -1;
  for (int s = 0; s <= 4; ++s) {
    const bool freeze = s <= through;
    for (auto& p : backbone->stage(s)->parameters()) p.set_requires_grad(!freeze);
    for (auto& b : backbone->stage_batch_norms(s)) b->set_locked(freeze);
  }
  return freeze_mask(backbone);
}

FreezeMask freeze_mask(const Backbone& backbone) {
  FreezeMask mask;
  for (const auto& item : backbone->named_parameters()) {
    (item.value().requires_grad() ? mask.trainable : mask.frozen).push_back(item.key());
  }
  return mask;
}

}  // namespace hybridvit::backbone
