#include "hybridvit/byol/mlp_head.hpp"

#include "hybridvit/errors.hpp"

namespace hybridvit::byol {

double leaky_rect(double x, double slope) { return x >= 0.0 ? x : slope * x; }

torch::Tensor leaky_rect(const torch::Tensor& x, double slope) {
  if (slope < 0.0) throw ConfigError("leaky slope must be >= 0");
  auto pos = x.clamp_min(0.0);
  if (slope == 0.0) return pos;
  return pos + slope * x.clamp_max(0.0);
}

MlpHeadImpl::MlpHeadImpl(MlpHeadConfig config) : config_(config) {
  if (config.in <= 0 || config.hidden <= 0 || config.out <= 0) {
    throw ConfigError("MLP head dimensions must be positive");
  }
  if (config.slope < 0.0) throw ConfigError("leaky slope must be >= 0");
  fc1 = register_module("fc1", torch::nn::Linear(config.in, config.hidden));
  bn = register_module("bn", nn::BatchNorm(config.hidden));
  fc2 = register_module("fc2", torch::nn::Linear(config.hidden, config.out));
}

torch::Tensor MlpHeadImpl::forward(const torch::Tensor& x) {
  return fc2->forward(leaky_rect(bn->forward(fc1->forward(x)), config_.slope));
}

void MlpHeadImpl::init_parameters(at::Generator& gen) {
  nn::linear_default_(fc1, gen);
  nn::linear_default_(fc2, gen);
}

}  // namespace hybridvit::byol
