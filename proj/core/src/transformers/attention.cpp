#include "hybridvit/transformers/attention.hpp"

#include <cmath>

#include "hybridvit/errors.hpp"

namespace hybridvit::transformers {

std::pair<torch::Tensor, torch::Tensor> scaled_dot_product_attention(const torch::Tensor& q,
                                                                     const torch::Tensor& k,
                                                                     const torch::Tensor& v) {
  if (q.dim() < 2 || !q.sizes().equals(k.sizes()) || q.size(-2) != v.size(-2)) {
    throw ShapeError("attention: inconsistent Q/K/V shapes");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
  auto weights = torch::softmax(torch::matmul(q, k.transpose(-2, -1)) * scale, -1);
  return {torch::matmul(weights, v), weights};
}

MultiHeadAttentionImpl::MultiHeadAttentionImpl(int64_t dim, int64_t heads) : dim_(dim), heads_(heads) {
  if (heads <= 0 || dim % heads != 0) {
    throw ConfigError("embed dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  qkv = register_module("qkv", torch::nn::Linear(dim, 3 * dim));
  proj = register_module("proj", torch::nn::Linear(dim, dim));
}

std::pair<torch::Tensor, torch::Tensor> MultiHeadAttentionImpl::forward_with_weights(const torch::Tensor& x) {
  const auto b = x.size(0);
  const auto n = x.size(1);
  const auto dh = dim_ / heads_;
  // [B, N, 3, h, dh] -> [3, B, h, N, dh]
  auto parts = qkv->forward(x).reshape({b, n, 3, heads_, dh}).permute({2, 0, 3, 1, 4});
  auto [mixed, weights] = transformers::scaled_dot_product_attention(parts[0], parts[1], parts[2]);
  auto out = mixed.transpose(1, 2).reshape({b, n, dim_});
  return {proj->forward(out), weights};
}

torch::Tensor MultiHeadAttentionImpl::forward(const torch::Tensor& x) { return forward_with_weights(x).first; }

}  // namespace hybridvit::transformers
