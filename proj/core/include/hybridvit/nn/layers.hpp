#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace hybridvit::nn {

/// Batch normalization over dim 1 of [N, C] or [N, C, H, W] input.
///
/// A locked layer always normalizes with its running statistics and never
/// updates them, whatever the module's training flag says.
class BatchNormImpl : public torch::nn::Module {
 public:
  explicit BatchNormImpl(int64_t features, double momentum = 0.1, double eps = 1e-5);

  torch::Tensor forward(const torch::Tensor& x);

  void set_locked(bool locked) { locked_ = locked; }
  bool locked() const noexcept { return locked_; }
  int64_t features() const noexcept { return features_; }

  torch::Tensor weight;
  torch::Tensor bias;
  torch::Tensor running_mean;
  torch::Tensor running_var;

 private:
  int64_t features_;
  double momentum_;
  double eps_;
  bool locked_ = false;
};
TORCH_MODULE(BatchNorm);

/// Deterministic generator for parameter initialization.
at::Generator make_generator(std::uint64_t seed);

/// He-normal (fan-out, rectifier gain) initialization for conv weights.
void kaiming_normal_fan_out(torch::Tensor& weight, at::Generator& gen);
/// Truncation-free normal(0, std) initialization.
void normal_(torch::Tensor& t, double std, at::Generator& gen);
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for linear layers.
void linear_default_(torch::nn::Linear& layer, at::Generator& gen);

/// Number of scalars in trainable (requires_grad) parameters.
int64_t count_trainable(const torch::nn::Module& module);
int64_t count_all(const torch::nn::Module& module);

}  // namespace hybridvit::nn
