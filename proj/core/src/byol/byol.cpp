#include "hybridvit/byol/byol.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "hybridvit/data/batch.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/nn/state.hpp"

namespace hybridvit::byol {

nlohmann::json to_json(const ByolConfig& c) {
  return {{"backbone", std::string(backbone::to_string(c.backbone.family))},
          {"width_multiplier", c.backbone.width_multiplier},
          {"zero_init_residual", c.backbone.zero_init_residual},
          {"hidden_dim", c.hidden_dim},
          {"proj_dim", c.proj_dim},
          {"slope", c.slope},
          {"tau", c.tau},
          {"tau_schedule", c.tau_schedule == TauSchedule::cosine ? "cosine" : "constant"},
          {"lr", c.lr},
          {"weight_decay", c.weight_decay}};
}

ByolConfig byol_config_from_json(const nlohmann::json& j) {
  ByolConfig c;
  try {
    c.backbone.family = backbone::parse_family(j.at("backbone").get<std::string>());
    c.backbone.width_multiplier = j.at("width_multiplier").get<double>();
    c.backbone.zero_init_residual = j.at("zero_init_residual").get<bool>();
    c.hidden_dim = j.at("hidden_dim").get<int64_t>();
    c.proj_dim = j.at("proj_dim").get<int64_t>();
    c.slope = j.at("slope").get<double>();
    c.tau = j.at("tau").get<double>();
    const auto sched = j.at("tau_schedule").get<std::string>();
    if (sched != "constant" && sched != "cosine") {
      throw ConfigError("tau_schedule must be 'constant' or 'cosine', got '" + sched + "'");
    }
    c.tau_schedule = sched == "cosine" ? TauSchedule::cosine : TauSchedule::constant;
    c.lr = j.at("lr").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("BYOL config: ") + e.what());
  }
  return c;
}

double tau_at(const ByolConfig& config, int64_t step, int64_t total_steps) {
  if (config.tau_schedule == TauSchedule::constant || total_steps <= 0) return config.tau;
  const double frac = static_cast<double>(std::min(step, total_steps)) / static_cast<double>(total_steps);
  return 1.0 - (1.0 - config.tau) * (std::cos(std::numbers::pi * frac) + 1.0) / 2.0;
}

BranchImpl::BranchImpl(const ByolConfig& config, bool with_predictor, std::uint64_t init_seed) {
  backbone = register_module("backbone", backbone::Backbone(config.backbone, init_seed));
  const auto feat = backbone->feature_dim();
  projector = register_module("projector",
                              MlpHead(MlpHeadConfig{feat, config.hidden_dim, config.proj_dim, config.slope}));
  auto gen = nn::make_generator(init_seed ^ 0x9e3779b97f4a7c15ULL);
  projector->init_parameters(gen);
  if (with_predictor) {
    predictor = register_module(
        "predictor", MlpHead(MlpHeadConfig{config.proj_dim, config.hidden_dim, config.proj_dim, config.slope}));
    predictor->init_parameters(gen);
  }
}

torch::Tensor BranchImpl::forward(const torch::Tensor& images) {
  auto z = projector->forward(backbone->forward_pooled(images));
  return predictor ? predictor->forward(z) : z;
}

ByolNetworkImpl::ByolNetworkImpl(const ByolConfig& config, std::uint64_t init_seed) {
  online = register_module("online", Branch(config, true, init_seed));
  target = register_module("target", Branch(config, false, init_seed));
  nn::copy_state(*online->backbone, *target->backbone);
  nn::copy_state(*online->projector, *target->projector);
  for (auto& p : target->parameters()) p.set_requires_grad(false);
}

torch::Tensor ByolNetworkImpl::loss(const torch::Tensor& view1, const torch::Tensor& view2) {
  auto q1 = online->forward(view1);
  auto q2 = online->forward(view2);
  torch::Tensor z1, z2;
  {
    torch::NoGradGuard guard;
    z1 = target->forward(view1);
    z2 = target->forward(view2);
  }
  return (regression_loss(q1, z2) + regression_loss(q2, z1)).mean();
}

std::vector<torch::Tensor> ByolNetworkImpl::online_shared_parameters() const {
  auto out = online->backbone->parameters();
  for (auto& p : online->projector->parameters()) out.push_back(p);
  return out;
}

std::vector<torch::Tensor> ByolNetworkImpl::target_parameters() const { return target->parameters(); }

void ema_update(std::span<const torch::Tensor> online, std::span<torch::Tensor> target, double tau) {
  if (online.size() != target.size()) {
    throw ShapeError("ema_update: " + std::to_string(online.size()) + " online vs " +
                     std::to_string(target.size()) + " target tensors");
  }
  for (std::size_t i = 0; i < online.size(); ++i) {
    if (!online[i].sizes().equals(target[i].sizes())) {
      throw ShapeError("ema_update: shape mismatch at tensor " + std::to_string(i));
    }
  }
  if (tau < 0.0 || tau > 1.0) throw ConfigError("ema_update: tau must be in [0, 1]");
  torch::NoGradGuard guard;
  for (std::size_t i = 0; i < online.size(); ++i) {
    if (tau == 1.0) continue;
    if (tau == 0.0) {
      target[i].copy_(online[i]);
    } else {
      target[i].mul_(tau).add_(online[i], 1.0 - tau);
    }
  }
}

ByolState::ByolState(ByolConfig cfg, std::uint64_t init_seed)
    : config(cfg), network(ByolNetwork(cfg, init_seed)), tau(cfg.tau) {
  optimizer = std::make_unique<nn::AdamW>(
      nn::named_parameters(*network->online, "online."),
      nn::AdamWOptions{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
}

std::optional<data::Normalization> pipeline_normalization(const augment::AugSpec& aug) {
  for (const auto& t : aug.transforms) {
    if (const auto* n = std::get_if<augment::Normalize>(&t.op)) return n->constants;
  }
  return std::nullopt;
}

std::pair<torch::Tensor, torch::Tensor> make_views(std::span<const data::ImageTensor> batch,
                                                   const augment::AugSpec& aug, RngStream& rng) {
  std::vector<data::ImageTensor> v1, v2;
  v1.reserve(batch.size());
  v2.reserve(batch.size());
  for (const auto& img : batch) {
    auto [a, b] = augment::two_views(aug, img, rng);
    v1.push_back(std::move(a));
    v2.push_back(std::move(b));
  }
  return {data::stack_images(v1), data::stack_images(v2)};
}

StepResult byol_step(ByolState& state, std::span<const data::ImageTensor> batch,
                     const augment::AugSpec& aug, RngStream& rng, double tau, long batch_index) {
  if (batch.empty()) throw ShapeError("byol_step: empty batch");
  auto [view1, view2] = make_views(batch, aug, rng);
  state.network->train();
  state.optimizer->zero_grad();
  auto loss = state.network->loss(view1, view2);
  const double value = loss.item<double>();
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite BYOL loss at batch " << batch_index << " (seed " << rng.seed() << ")";
    throw NonFiniteLoss(msg.str(), batch_index, rng.seed());
  }
  loss.backward();
  state.optimizer->step();
  auto online = state.network->online_shared_parameters();
  auto target = state.network->target_parameters();
  ema_update(online, target, tau);
  state.tau = tau;
  ++state.step;
  return {value, tau};
}

}  // namespace hybridvit::byol
