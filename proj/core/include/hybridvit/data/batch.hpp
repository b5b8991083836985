#pragma once

#include <span>

#include <torch/torch.h>

#include "hybridvit/data/image.hpp"

namespace hybridvit::data {

/// Stacks same-shaped images into an [N, C, H, W] float tensor.
torch::Tensor stack_images(std::span<const ImageTensor> images);

/// Copies one [C, H, W] tensor back into an ImageTensor.
ImageTensor image_from_tensor(const torch::Tensor& chw);

/// (x - mean) / std per channel of an [N, 3, H, W] batch.
torch::Tensor normalize_batch(const torch::Tensor& x, const Normalization& n);

}  // namespace hybridvit::data
