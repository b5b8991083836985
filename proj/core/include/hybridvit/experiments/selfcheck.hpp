#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace hybridvit::experiments {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Largest relative error between the autograd gradient of `f` and central
/// differences, over every element of every tensor in `inputs` (double
/// precision expected). Relative error is |a - n| / max(1, |a|, |n|).
double max_gradient_error(const std::function<torch::Tensor()>& f, const std::vector<torch::Tensor>& inputs,
                          double step = 1e-6);

/// Fast invariant and gradient checks over the library's building blocks.
std::vector<CheckResult> run_selfcheck(std::uint64_t seed);

}  // namespace hybridvit::experiments
