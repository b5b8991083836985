#pragma once

#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace hybridvit::nn {

using NamedTensors = std::vector<std::pair<std::string, torch::Tensor>>;

/// Parameters followed by buffers, in registration order, names prefixed.
NamedTensors collect_state(const torch::nn::Module& module, const std::string& prefix = "");

/// Named parameters only (the optimizer's view).
NamedTensors named_parameters(const torch::nn::Module& module, const std::string& prefix = "");

/// Copies tensors into `module`. Every parameter and buffer under `prefix`
/// must be present with a matching shape; anything missing is an error.
void load_state(torch::nn::Module& module, const NamedTensors& tensors,
                const std::string& prefix = "");

/// Deep copy of all parameters and buffers from `src` into `dst` (same structure).
void copy_state(const torch::nn::Module& src, torch::nn::Module& dst);

/// 64-bit FNV-1a over the raw bytes of every parameter and buffer.
std::uint64_t state_hash(const torch::nn::Module& module);

}  // namespace hybridvit::nn
