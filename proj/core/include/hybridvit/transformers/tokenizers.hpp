#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace hybridvit::transformers {

/// ceil(h / p) * ceil(w / p).
int64_t patch_count(int64_t h, int64_t w, int64_t p);

/// Zero-pads [B, C, H, W] up to multiples of p and returns the flattened
/// patches as [B, N, C*p*p] in row-major patch order. Within a patch,
/// values are ordered channel, row, column.
torch::Tensor patchify(const torch::Tensor& x, int64_t p);

/// Linear embedding of non-overlapping p x p patches.
class PatchEmbedImpl : public torch::nn::Module {
 public:
  PatchEmbedImpl(int64_t in_channels, int64_t patch, int64_t dim);

  /// [B, C, H, W] -> [B, N, dim].
  torch::Tensor forward(const torch::Tensor& x);
  int64_t token_count(int64_t h, int64_t w) const { return patch_count(h, w, patch_); }
  int64_t patch() const noexcept { return patch_; }

  torch::nn::Linear proj{nullptr};

 private:
  int64_t in_channels_;
  int64_t patch_;
};
TORCH_MODULE(PatchEmbed);

struct ConvTokenizerSpec {
  int layers = 1;
  int kernel = 3;
  int stride = 1;
  int pool_kernel = 3;
  int pool_stride = 2;
  /// Channels of the intermediate conv layers; the last one outputs dim.
  int64_t hidden_channels = 64;

  bool operator==(const ConvTokenizerSpec&) const = default;
};

/// Spatial size after one conv (pad kernel/2) + max-pool (pad pool_kernel/2) block.
int64_t conv_block_output(int64_t size, const ConvTokenizerSpec& spec);

/// Stack of conv -> rectifier -> max-pool blocks whose output cells become tokens.
class ConvTokenizerImpl : public torch::nn::Module {
 public:
  ConvTokenizerImpl(int64_t in_channels, int64_t dim, ConvTokenizerSpec spec);

  /// [B, C, H, W] -> [B, H'*W', dim].
  torch::Tensor forward(const torch::Tensor& x);
  /// H' * W'; ShapeError when the stack would shrink the input below 1x1.
  int64_t token_count(int64_t h, int64_t w) const;

  torch::nn::ModuleList convs{nullptr};

 private:
  ConvTokenizerSpec spec_;
};
TORCH_MODULE(ConvTokenizer);

}  // namespace hybridvit::transformers
