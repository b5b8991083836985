#pragma once

#include <torch/torch.h>

namespace hybridvit::nn {

/// Anything that maps an [N, C, H, W] image batch to [N, classes] logits.
class ClassifierBase : public torch::nn::Module {
 public:
  virtual torch::Tensor forward(const torch::Tensor& images) = 0;
  virtual int64_t num_classes() const = 0;
};

}  // namespace hybridvit::nn
