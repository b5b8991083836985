#pragma once

#include <span>

#include <torch/torch.h>

namespace hybridvit::byol {

/// Added under the square root of every norm so zero vectors stay finite.
inline constexpr double kNormEps = 1e-12;

/// 2 - 2 cos(q, z) per row of [N, D] inputs; `z` is detached. Result is [N].
torch::Tensor regression_loss(const torch::Tensor& q, const torch::Tensor& z);

/// Scalar form over plain vectors.
double regression_loss(std::span<const double> q, std::span<const double> z);

}  // namespace hybridvit::byol
