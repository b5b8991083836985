#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "hybridvit/transformers/attention.hpp"

namespace hybridvit::transformers {

/// Pre-norm block: x + MHA(LN(x)), then x + MLP(LN(x)) with a GELU MLP.
class EncoderBlockImpl : public torch::nn::Module {
 public:
  EncoderBlockImpl(int64_t dim, int64_t heads, double mlp_ratio);

  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::LayerNorm norm1{nullptr};
  MultiHeadAttention attn{nullptr};
  torch::nn::LayerNorm norm2{nullptr};
  torch::nn::Linear fc1{nullptr};
  torch::nn::Linear fc2{nullptr};
};
TORCH_MODULE(EncoderBlock);

/// Attention-weighted average of tokens: w = softmax_N(g(x)), out = sum_i w_i x_i.
class SeqPoolImpl : public torch::nn::Module {
 public:
  explicit SeqPoolImpl(int64_t dim);

  /// [B, N, d] -> [B, d].
  torch::Tensor forward(const torch::Tensor& x);
  /// [B, N] pooling weights.
  torch::Tensor weights(const torch::Tensor& x);

  torch::nn::Linear g{nullptr};
};
TORCH_MODULE(SeqPool);

}  // namespace hybridvit::transformers
