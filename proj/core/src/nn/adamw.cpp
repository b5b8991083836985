#include "hybridvit/nn/adamw.hpp"

#include <cmath>
#include <map>

#include "hybridvit/errors.hpp"

namespace hybridvit::nn {

AdamW::AdamW(std::vector<NamedTensor> params, AdamWOptions options) : options_(options) {
  for (auto& [name, p] : params) {
    slots_.push_back({name, p, torch::zeros_like(p), torch::zeros_like(p), 0});
  }
}

void AdamW::zero_grad() {
  for (auto& s : slots_) {
    if (s.param.grad().defined()) s.param.mutable_grad() = torch::Tensor();
  }
}

void AdamW::step() {
  torch::NoGradGuard guard;
  ++steps_;
  for (auto& s : slots_) {
    if (!s.param.requires_grad() || !s.param.grad().defined()) continue;
    const auto& g = s.param.grad();
    ++s.steps;
    s.param.mul_(1.0 - options_.lr * options_.weight_decay);
    s.exp_avg.mul_(options_.beta1).add_(g, 1.0 - options_.beta1);
    s.exp_avg_sq.mul_(options_.beta2).addcmul_(g, g, 1.0 - options_.beta2);
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(s.steps));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(s.steps));
    auto denom = (s.exp_avg_sq.sqrt() / std::sqrt(bc2)).add_(options_.eps);
    s.param.addcdiv_(s.exp_avg, denom, -options_.lr / bc1);
  }
}

std::vector<AdamW::NamedTensor> AdamW::state() const {
  std::vector<NamedTensor> out;
  for (const auto& s : slots_) {
    out.emplace_back("exp_avg." + s.name, s.exp_avg);
    out.emplace_back("exp_avg_sq." + s.name, s.exp_avg_sq);
    out.emplace_back("steps." + s.name, torch::tensor({s.steps}, torch::kInt64));
  }
  return out;
}

void AdamW::load_state(const std::vector<NamedTensor>& tensors, int64_t step_count) {
  std::map<std::string, torch::Tensor> by_name(tensors.begin(), tensors.end());
  torch::NoGradGuard guard;
  for (auto& s : slots_) {
    auto a = by_name.find("exp_avg." + s.name);
    auto b = by_name.find("exp_avg_sq." + s.name);
    auto c = by_name.find("steps." + s.name);
    if (a == by_name.end() || b == by_name.end() || c == by_name.end()) {
      throw CheckpointError("optimizer state missing for '" + s.name + "'");
    }
    if (!a->second.sizes().equals(s.exp_avg.sizes())) {
      throw CheckpointError("optimizer state shape mismatch for '" + s.name + "'");
    }
    s.exp_avg.copy_(a->second);
    s.exp_avg_sq.copy_(b->second);
    s.steps = c->second.item<int64_t>();
  }
  steps_ = step_count;
}

}  // namespace hybridvit::nn
