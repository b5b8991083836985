#include "hybridvit/transformers/tokenizers.hpp"

#include "hybridvit/errors.hpp"

namespace hybridvit::transformers {

namespace F = torch::nn::functional;

int64_t patch_count(int64_t h, int64_t w, int64_t p) {
  if (p < 1) throw ConfigError("patch size must be >= 1");
  return ((h + p - 1) / p) * ((w + p - 1) / p);
}

torch::Tensor patchify(const torch::Tensor& x, int64_t p) {
  if (p < 1) throw ConfigError("patch size must be >= 1");
  if (x.dim() != 4) throw ShapeError("patchify expects [B, C, H, W]");
  const auto b = x.size(0), c = x.size(1), h = x.size(2), w = x.size(3);
  const auto gh = (h + p - 1) / p, gw = (w + p - 1) / p;
  auto padded = x;
  if (gh * p != h || gw * p != w) {
    padded = F::pad(x, F::PadFuncOptions({0, gw * p - w, 0, gh * p - h}));
  }
  // [B, C, gh, p, gw, p] -> [B, gh, gw, C, p, p]
  return padded.reshape({b, c, gh, p, gw, p}).permute({0, 2, 4, 1, 3, 5}).reshape({b, gh * gw, c * p * p});
}

PatchEmbedImpl::PatchEmbedImpl(int64_t in_channels, int64_t patch, int64_t dim)
    : in_channels_(in_channels), patch_(patch) {
  if (patch < 1) throw ConfigError("patch size must be >= 1");
  proj = register_module("proj", torch::nn::Linear(in_channels * patch * patch, dim));
}

torch::Tensor PatchEmbedImpl::forward(const torch::Tensor& x) {
  if (x.size(1) != in_channels_) {
    throw ShapeError("patch embedding expects " + std::to_string(in_channels_) + " channels, got " +
                     std::to_string(x.size(1)));
  }
  return proj->forward(patchify(x, patch_));
}

int64_t conv_block_output(int64_t size, const ConvTokenizerSpec& spec) {
  const auto pad = spec.kernel / 2;
  const auto conv = (size + 2 * pad - spec.kernel) / spec.stride + 1;
  if (conv < 1) return 0;
  const auto ppad = spec.pool_kernel / 2;
  return (conv + 2 * ppad - spec.pool_kernel) / spec.pool_stride + 1;
}

ConvTokenizerImpl::ConvTokenizerImpl(int64_t in_channels, int64_t dim, ConvTokenizerSpec spec) : spec_(spec) {
  if (spec.layers < 1 || spec.kernel < 1 || spec.stride < 1 || spec.pool_kernel < 1 || spec.pool_stride < 1) {
    throw ConfigError("conv tokenizer: layers, kernel, stride and pooling must be >= 1");
  }
  convs = register_module("convs", torch::nn::ModuleList());
  auto in = in_channels;
  for (int i = 0; i < spec.layers; ++i) {
    const auto out = i + 1 == spec.layers ? dim : spec.hidden_channels;
    convs->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, spec.kernel)
                                           .stride(spec.stride)
                                           .padding(spec.kernel / 2)
                                           .bias(false)));
    in = out;
  }
}

int64_t ConvTokenizerImpl::token_count(int64_t h, int64_t w) const {
  for (int i = 0; i < spec_.layers; ++i) {
    h = conv_block_output(h, spec_);
    w = conv_block_output(w, spec_);
    if (h < 1 || w < 1) {
      throw ShapeError("conv tokenizer collapses the input below 1x1 at layer " + std::to_string(i + 1));
    }
  }
  return h * w;
}

torch::Tensor ConvTokenizerImpl::forward(const torch::Tensor& x) {
  token_count(x.size(2), x.size(3));
  auto y = x;
  for (const auto& m : *convs) {
    y = m->as<torch::nn::Conv2d>()->forward(y).relu();
    y = F::max_pool2d(y, F::MaxPool2dFuncOptions(spec_.pool_kernel)
                             .stride(spec_.pool_stride)
                             .padding(spec_.pool_kernel / 2));
  }
  return y.flatten(2).transpose(1, 2);
}

}  // namespace hybridvit::transformers
