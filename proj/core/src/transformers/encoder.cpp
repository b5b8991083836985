#include "hybridvit/transformers/encoder.hpp"

#include <cmath>

#include "hybridvit/errors.hpp"

namespace hybridvit::transformers {

EncoderBlockImpl::EncoderBlockImpl(int64_t dim, int64_t heads, double mlp_ratio) {
  const auto hidden = static_cast<int64_t>(std::llround(static_cast<double>(dim) * mlp_ratio));
  if (hidden < 1) throw ConfigError("mlp_ratio too small for embed dim " + std::to_string(dim));
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attn = register_module("attn", MultiHeadAttention(dim, heads));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
}

torch::Tensor EncoderBlockImpl::forward(const torch::Tensor& x) {
  auto y = x + attn->forward(norm1->forward(x));
  return y + fc2->forward(torch::gelu(fc1->forward(norm2->forward(y))));
}

SeqPoolImpl::SeqPoolImpl(int64_t dim) { g = register_module("g", torch::nn::Linear(dim, 1)); }

torch::Tensor SeqPoolImpl::weights(const torch::Tensor& x) {
  return torch::softmax(g->forward(x).squeeze(-1), -1);
}

torch::Tensor SeqPoolImpl::forward(const torch::Tensor& x) {
  return torch::matmul(weights(x).unsqueeze(1), x).squeeze(1);
}

}  // namespace hybridvit::transformers
