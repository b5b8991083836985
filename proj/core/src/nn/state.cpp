#include "hybridvit/nn/state.hpp"

#include <map>

#include "hybridvit/errors.hpp"

namespace hybridvit::nn {

NamedTensors collect_state(const torch::nn::Module& module, const std::string& prefix) {
  NamedTensors out;
  for (const auto& item : module.named_parameters()) out.emplace_back(prefix + item.key(), item.value());
  for (const auto& item : module.named_buffers()) out.emplace_back(prefix + item.key(), item.value());
  return out;
}

NamedTensors named_parameters(const torch::nn::Module& module, const std::string& prefix) {
  NamedTensors out;
  for (const auto& item : module.named_parameters()) out.emplace_back(prefix + item.key(), item.value());
  return out;
}

void load_state(torch::nn::Module& module, const NamedTensors& tensors, const std::string& prefix) {
  std::map<std::string, const torch::Tensor*> by_name;
  for (const auto& [name, t] : tensors) by_name[name] = &t;
  torch::NoGradGuard guard;
  for (auto& [name, dst] : collect_state(module, prefix)) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw CheckpointError("missing tensor '" + name + "'");
    if (!it->second->sizes().equals(dst.sizes())) {
      throw CheckpointError("shape mismatch for '" + name + "'");
    }
    dst.copy_(*it->second);
  }
}

void copy_state(const torch::nn::Module& src, torch::nn::Module& dst) {
  load_state(dst, collect_state(src));
}

std::uint64_t state_hash(const torch::nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [name, t] : collect_state(module)) {
    for (char ch : name) h = (h ^ static_cast<unsigned char>(ch)) * 0x100000001b3ULL;
    auto c = t.contiguous();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const auto n = static_cast<std::size_t>(c.numel()) * c.element_size();
    for (std::size_t i = 0; i < n; ++i) h = (h ^ bytes[i]) * 0x100000001b3ULL;
  }
  return h;
}

}  // namespace hybridvit::nn
