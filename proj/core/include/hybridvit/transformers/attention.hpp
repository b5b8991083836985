#pragma once

#include <cstdint>
#include <utility>

#include <torch/torch.h>

namespace hybridvit::transformers {

/// softmax(Q K^T / sqrt(d_head)) V over the last two dims of [..., N, d_head]
/// inputs. Returns (output, attention weights).
std::pair<torch::Tensor, torch::Tensor> scaled_dot_product_attention(const torch::Tensor& q,
                                                                     const torch::Tensor& k,
                                                                     const torch::Tensor& v);

class MultiHeadAttentionImpl : public torch::nn::Module {
 public:
  MultiHeadAttentionImpl(int64_t dim, int64_t heads);

  /// [B, N, d] -> [B, N, d].
  torch::Tensor forward(const torch::Tensor& x);
  /// Same, also returning the [B, heads, N, N] weights.
  std::pair<torch::Tensor, torch::Tensor> forward_with_weights(const torch::Tensor& x);

  int64_t heads() const noexcept { return heads_; }

  torch::nn::Linear qkv{nullptr};
  torch::nn::Linear proj{nullptr};

 private:
  int64_t dim_;
  int64_t heads_;
};
TORCH_MODULE(MultiHeadAttention);

}  // namespace hybridvit::transformers
