#include "hybridvit/nn/layers.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <cmath>

namespace hybridvit::nn {

BatchNormImpl::BatchNormImpl(int64_t features, double momentum, double eps)
    : features_(features), momentum_(momentum), eps_(eps) {
  weight = register_parameter("weight", torch::ones({features}));
  bias = register_parameter("bias", torch::zeros({features}));
  running_mean = register_buffer("running_mean", torch::zeros({features}));
  running_var = register_buffer("running_var", torch::ones({features}));
}

torch::Tensor BatchNormImpl::forward(const torch::Tensor& x) {
  const bool use_batch_stats = is_training() && !locked_;
  return torch::batch_norm(x, weight, bias, running_mean, running_var, use_batch_stats, momentum_,
                           eps_, /*cudnn_enabled=*/false);
}

at::Generator make_generator(std::uint64_t seed) {
  return at::make_generator<at::CPUGeneratorImpl>(seed);
}

void kaiming_normal_fan_out(torch::Tensor& weight, at::Generator& gen) {
  torch::NoGradGuard guard;
  const auto fan_out = weight.size(0) * (weight.dim() > 2 ? weight[0][0].numel() : 1);
  const double std = std::sqrt(2.0 / static_cast<double>(fan_out));
  weight.normal_(0.0, std, gen);
}

void normal_(torch::Tensor& t, double std, at::Generator& gen) {
  torch::NoGradGuard guard;
  t.normal_(0.0, std, gen);
}

void linear_default_(torch::nn::Linear& layer, at::Generator& gen) {
  torch::NoGradGuard guard;
  const double bound = 1.0 / std::sqrt(static_cast<double>(layer->weight.size(1)));
  layer->weight.uniform_(-bound, bound, gen);
  if (layer->bias.defined()) layer->bias.uniform_(-bound, bound, gen);
}

int64_t count_trainable(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) n += p.numel();
  }
  return n;
}

int64_t count_all(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace hybridvit::nn
