#include "hybridvit/byol/pretrain.hpp"

#include <chrono>
#include <numeric>

#include "hybridvit/data/subset_detail.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/hash.hpp"
#include "hybridvit/nn/state.hpp"

namespace hybridvit::byol {

namespace {

constexpr std::uint64_t kShuffleKey = 0x5348;  // "SH"
constexpr std::uint64_t kViewKey = 0x5657;     // "VW"

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int epoch) {
  return dir / ("byol-epoch" + std::to_string(epoch) + ".ckpt");
}

}  // namespace

nlohmann::json to_json(const PretrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"aug", c.aug},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size}};
}

train::Checkpoint save_state(const ByolState& state, const train::MetricsHistory& history,
                             std::uint64_t seed, const std::string& config_hash) {
  train::Checkpoint ckpt;
  ckpt.kind = kByolCheckpointKind;
  ckpt.config_hash = config_hash;
  ckpt.tensors = nn::collect_state(*state.network);
  for (auto& [name, t] : state.optimizer->state()) ckpt.tensors.emplace_back("opt." + name, t);
  ckpt.meta = {{"model", to_json(state.config)},
               {"step", state.step},
               {"epoch", state.epoch},
               {"tau", state.tau},
               {"optimizer_steps", state.optimizer->step_count()},
               {"seed", seed},
               {"metrics_csv", history.to_csv()}};
  if (state.input_normalization) {
    ckpt.meta["input_normalization"] = {{"mean", state.input_normalization->mean},
                                        {"std", state.input_normalization->std}};
  }
  return ckpt;
}

std::unique_ptr<ByolState> load_state(const train::Checkpoint& ckpt, train::MetricsHistory* history) {
  if (ckpt.kind != kByolCheckpointKind) {
    throw CheckpointError("expected a BYOL checkpoint, got kind '" + ckpt.kind + "'");
  }
  try {
    auto state = std::make_unique<ByolState>(byol_config_from_json(ckpt.meta.at("model")), 0);
    nn::NamedTensors model, opt;
    for (const auto& [name, t] : ckpt.tensors) {
      if (name.rfind("opt.", 0) == 0) {
        opt.emplace_back(name.substr(4), t);
      } else {
        model.emplace_back(name, t);
      }
    }
    nn::load_state(*state->network, model);
    state->optimizer->load_state(opt, ckpt.meta.at("optimizer_steps").get<int64_t>());
    state->step = ckpt.meta.at("step").get<int64_t>();
    state->epoch = ckpt.meta.at("epoch").get<int>();
    state->tau = ckpt.meta.at("tau").get<double>();
    if (ckpt.meta.contains("input_normalization")) {
      const auto& n = ckpt.meta["input_normalization"];
      state->input_normalization =
          data::Normalization{n.at("mean").get<std::array<float, 3>>(), n.at("std").get<std::array<float, 3>>()};
    }
    if (history) *history = train::MetricsHistory::from_csv(ckpt.meta.at("metrics_csv").get<std::string>());
    return state;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("BYOL checkpoint metadata: ") + e.what());
  }
}

PretrainResult pretrain(const data::Dataset& unlabeled, const PretrainConfig& config,
                        std::uint64_t seed, const PretrainHooks& hooks,
                        const std::filesystem::path& resume_from) {
  if (unlabeled.empty()) throw ConfigError("pretrain: dataset is empty");
  if (config.epochs < 0) throw ConfigError("pretrain: epochs must be >= 0");
  if (config.batch_size < 1) throw ConfigError("pretrain: batch_size must be >= 1");

  const auto aug = augment::build_pipeline(config.aug, unlabeled.images.front().height());
  const auto hash = config_hash(to_json(config));

  PretrainResult result;
  if (!resume_from.empty()) {
    auto ckpt = train::read_checkpoint(resume_from, hash);
    result.state = load_state(ckpt, &result.history);
    if (ckpt.meta.at("seed").get<std::uint64_t>() != seed) {
      throw CheckpointError("pretrain: checkpoint was written with a different seed");
    }
  } else {
    result.state = std::make_unique<ByolState>(config.model, seed);
    result.state->input_normalization = pipeline_normalization(aug);
  }
  ByolState& state = *result.state;

  const auto n = static_cast<int64_t>(unlabeled.size());
  const int64_t batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const int64_t total_steps = batches_per_epoch * config.epochs;
  const auto t0 = std::chrono::steady_clock::now();

  for (int epoch = state.epoch + 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(unlabeled.size());
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = RngStream::derive(seed, {kShuffleKey, static_cast<std::uint64_t>(epoch)});
    data::detail::seeded_shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    int64_t loss_count = 0;
    std::vector<data::ImageTensor> batch;
    for (int64_t b = 0; b < batches_per_epoch; ++b) {
      const auto begin = b * config.batch_size;
      const auto end = std::min<int64_t>(begin + config.batch_size, n);
      if (end - begin < 2) continue;
      batch.clear();
      for (auto i = begin; i < end; ++i) batch.push_back(unlabeled.images[order[i]]);
      auto rng = RngStream::derive(seed, {kViewKey, static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(b)});
      const double tau = tau_at(state.config, state.step, total_steps);
      const auto r = byol_step(state, batch, aug, rng, tau, static_cast<long>(b));
      loss_sum += r.loss;
      ++loss_count;
      if (hooks.on_step) hooks.on_step(state.step, r.loss);
    }
    state.epoch = epoch;
    const double mean = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.add({epoch, "pretrain", std::nullopt, mean, state.optimizer->lr(), wall});
    if (hooks.on_epoch) hooks.on_epoch(epoch, mean);

    if (!config.checkpoint_dir.empty() &&
        ((config.save_every > 0 && epoch % config.save_every == 0) || epoch == config.epochs)) {
      train::write_checkpoint(checkpoint_path(config.checkpoint_dir, epoch),
                              save_state(state, result.history, seed, hash));
    }
  }
  return result;
}

}  // namespace hybridvit::byol
