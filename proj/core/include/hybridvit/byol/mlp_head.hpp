#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "hybridvit/nn/layers.hpp"

namespace hybridvit::byol {

/// x for x >= 0, slope * x otherwise.
double leaky_rect(double x, double slope);

/// Elementwise leaky rectifier. With slope 0 the output is bit-identical to
/// clamp_min(x, 0).
torch::Tensor leaky_rect(const torch::Tensor& x, double slope);

struct MlpHeadConfig {
  int64_t in = 0;
  int64_t hidden = 512;
  int64_t out = 64;
  double slope = 0.01;

  bool operator==(const MlpHeadConfig&) const = default;
};

/// Linear -> BatchNorm -> leaky rectifier -> Linear.
class MlpHeadImpl : public torch::nn::Module {
 public:
  explicit MlpHeadImpl(MlpHeadConfig config);

  torch::Tensor forward(const torch::Tensor& x);
  const MlpHeadConfig& config() const noexcept { return config_; }
  void init_parameters(at::Generator& gen);

  torch::nn::Linear fc1{nullptr};
  nn::BatchNorm bn{nullptr};
  torch::nn::Linear fc2{nullptr};

 private:
  MlpHeadConfig config_;
};
TORCH_MODULE(MlpHead);

}  // namespace hybridvit::byol
