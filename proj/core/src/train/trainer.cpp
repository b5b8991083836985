#include "hybridvit/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hybridvit/augment/pipeline.hpp"
#include "hybridvit/data/batch.hpp"
#include "hybridvit/data/subset_detail.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/hash.hpp"
#include "hybridvit/nn/adamw.hpp"
#include "hybridvit/nn/state.hpp"
#include "hybridvit/train/models.hpp"

namespace hybridvit::train {

namespace F = torch::nn::functional;

namespace {

constexpr std::uint64_t kSplitKey = 0x5350;    // "SP"
constexpr std::uint64_t kShuffleKey = 0x5348;  // "SH"
constexpr std::uint64_t kAugKey = 0x4147;      // "AG"

nn::NamedTensors clone_state(const torch::nn::Module& model) {
  nn::NamedTensors out;
  for (const auto& [name, t] : nn::collect_state(model)) out.emplace_back(name, t.detach().clone());
  return out;
}

std::filesystem::path epoch_path(const std::filesystem::path& dir, int epoch) {
  return dir / ("finetune-epoch" + std::to_string(epoch) + ".ckpt");
}

}  // namespace

void TrainHp::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("val_fraction must be in [0, 1)");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw ConfigError("label_smoothing must be in [0, 1)");
  augment::build_pipeline(aug);
}

nlohmann::json to_json(const TrainHp& hp) {
  nlohmann::json j = {{"lr", hp.lr},
                      {"weight_decay", hp.weight_decay},
                      {"batch_size", hp.batch_size},
                      {"epochs", hp.epochs},
                      {"aug", hp.aug},
                      {"seed", hp.seed},
                      {"label_smoothing", hp.label_smoothing},
                      {"val_fraction", hp.val_fraction}};
  if (hp.stop_at_train_top1) j["stop_at_train_top1"] = *hp.stop_at_train_top1;
  return j;
}

torch::Tensor argmax_lowest(const torch::Tensor& logits) {
  // torch::argmax does not document its tie-break, so compare against the row max.
  auto max = std::get<0>(logits.max(1, true));
  auto is_max = logits == max;
  auto idx = torch::arange(logits.size(1), torch::kInt64).expand_as(logits);
  auto big = torch::full_like(idx, logits.size(1));
  return torch::where(is_max, idx, big).amin(1);
}

EvalResult evaluate(nn::ClassifierBase& model, const data::Dataset& dataset, int batch_size) {
  if (dataset.empty()) throw ConfigError("evaluate: dataset is empty");
  if (!dataset.labeled()) throw ConfigError("evaluate: dataset has no labels");
  const bool was_training = model.is_training();
  model.eval();
  torch::NoGradGuard guard;
  double loss_sum = 0.0;
  int64_t correct = 0;
  const auto n = dataset.size();
  for (std::size_t begin = 0; begin < n; begin += batch_size) {
    const auto end = std::min<std::size_t>(begin + batch_size, n);
    auto x = data::stack_images(std::span(dataset.images).subspan(begin, end - begin));
    auto y = torch::tensor(std::vector<int64_t>(dataset.labels.begin() + begin, dataset.labels.begin() + end));
    auto logits = model.forward(x.to(model.parameters().front().scalar_type()));
    loss_sum += F::cross_entropy(logits, y, F::CrossEntropyFuncOptions().reduction(torch::kSum)).item<double>();
    correct += (argmax_lowest(logits) == y).sum().item<int64_t>();
  }
  model.train(was_training);
  return {static_cast<double>(correct) / static_cast<double>(n), loss_sum / static_cast<double>(n)};
}

FinetuneResult finetune(nn::ClassifierBase& model, const data::Dataset& labeled, const TrainHp& hp,
                        const TrainHooks& hooks, const std::filesystem::path& resume_from) {
  hp.validate();
  if (labeled.empty()) throw ConfigError("finetune: dataset is empty");
  if (!labeled.labeled()) throw ConfigError("finetune: dataset has no labels");
  const auto aug = augment::build_pipeline(hp.aug, labeled.images.front().height());
  const auto hash = config_hash(to_json(hp));

  data::Dataset train_set = labeled;
  std::optional<data::Dataset> val_set;
  if (hp.val_fraction > 0.0) {
    const auto split = data::stratified_split(labeled.labels, labeled.num_classes(), hp.val_fraction,
                                              mix64(hp.seed ^ kSplitKey));
    train_set = data::select(labeled, split.train);
    if (!split.val.empty()) val_set = data::select(labeled, split.val);
  }

  nn::AdamW optimizer(nn::named_parameters(model), {hp.lr, 0.9, 0.999, 1e-8, hp.weight_decay});
  FinetuneResult result;
  nn::NamedTensors best_state;
  int start_epoch = 1;
  int64_t step = 0;

  if (!resume_from.empty()) {
    auto ckpt = read_checkpoint(resume_from, hash);
    if (ckpt.kind != kClassifierCheckpointKind) throw CheckpointError("expected a classifier checkpoint");
    nn::load_state(model, ckpt.with_prefix("model."));
    optimizer.load_state(ckpt.with_prefix("opt."), ckpt.meta.at("optimizer_steps").get<int64_t>());
    best_state = ckpt.with_prefix("best.");
    result.history = MetricsHistory::from_csv(ckpt.meta.at("metrics_csv").get<std::string>());
    result.best_epoch = ckpt.meta.at("best_epoch").get<int>();
    if (ckpt.meta.contains("best_val_top1")) result.best_val_top1 = ckpt.meta["best_val_top1"].get<double>();
    start_epoch = ckpt.meta.at("epoch").get<int>() + 1;
    step = ckpt.meta.at("step").get<int64_t>();
  }

  const auto dtype = model.parameters().front().scalar_type();
  const auto n = static_cast<int64_t>(train_set.size());
  const int64_t batches = (n + hp.batch_size - 1) / hp.batch_size;
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  auto record = [&](MetricsRecord r) {
    result.history.add(r);
    if (hooks.on_record) hooks.on_record(r);
  };

  bool stopped = false;
  for (int epoch = start_epoch; epoch <= hp.epochs && !stopped; ++epoch) {
    model.train();
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    auto shuffle_rng = RngStream::derive(hp.seed, {kShuffleKey, static_cast<std::uint64_t>(epoch)});
    data::detail::seeded_shuffle(order, shuffle_rng);

    double loss_sum = 0.0;
    int64_t correct = 0, seen = 0;
    std::vector<data::ImageTensor> batch;
    std::vector<int64_t> labels;
    for (int64_t b = 0; b < batches; ++b) {
      const auto begin = b * hp.batch_size;
      const auto end = std::min<int64_t>(begin + hp.batch_size, n);
      auto rng = RngStream::derive(hp.seed, {kAugKey, static_cast<std::uint64_t>(epoch),
                                             static_cast<std::uint64_t>(b)});
      batch.clear();
      labels.clear();
      for (auto i = begin; i < end; ++i) {
        batch.push_back(augment::apply(aug, train_set.images[order[i]], rng));
        labels.push_back(train_set.labels[order[i]]);
      }
      auto x = data::stack_images(batch).to(dtype);
      auto y = torch::tensor(labels);
      optimizer.zero_grad();
      auto logits = model.forward(x);
      auto loss = F::cross_entropy(logits, y, F::CrossEntropyFuncOptions().label_smoothing(hp.label_smoothing));
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << b << " (seed " << hp.seed << ")";
        throw NonFiniteLoss(msg.str(), static_cast<long>(b), hp.seed);
      }
      loss.backward();
      optimizer.step();
      ++step;
      if (hooks.on_step) hooks.on_step(step, value);
      loss_sum += value * static_cast<double>(end - begin);
      correct += (argmax_lowest(logits.detach()) == y).sum().item<int64_t>();
      seen += end - begin;
    }
    const double train_top1 = static_cast<double>(correct) / static_cast<double>(seen);
    record({epoch, "train", train_top1, loss_sum / static_cast<double>(seen), hp.lr, wall()});

    if (val_set) {
      const auto v = evaluate(model, *val_set);
      record({epoch, "val", v.top1, v.loss, hp.lr, wall()});
      if (!result.best_val_top1 || v.top1 > *result.best_val_top1) {
        result.best_val_top1 = v.top1;
        result.best_epoch = epoch;
        best_state = clone_state(model);
      }
    } else {
      result.best_epoch = epoch;
    }
    stopped = hp.stop_at_train_top1 && train_top1 >= *hp.stop_at_train_top1;

    if (!hp.checkpoint_dir.empty() && hp.save_every > 0 && (epoch % hp.save_every == 0 || stopped)) {
      Checkpoint ckpt;
      ckpt.kind = kClassifierCheckpointKind;
      ckpt.config_hash = hash;
      for (auto& [k, t] : nn::collect_state(model)) ckpt.tensors.emplace_back("model." + k, t);
      for (auto& [k, t] : optimizer.state()) ckpt.tensors.emplace_back("opt." + k, t);
      for (auto& [k, t] : best_state) ckpt.tensors.emplace_back("best." + k, t);
      ckpt.meta = {{"epoch", epoch},
                   {"step", step},
                   {"optimizer_steps", optimizer.step_count()},
                   {"best_epoch", result.best_epoch},
                   {"metrics_csv", result.history.to_csv()}};
      if (result.best_val_top1) ckpt.meta["best_val_top1"] = *result.best_val_top1;
      write_checkpoint(epoch_path(hp.checkpoint_dir, epoch), ckpt);
    }
  }
  if (val_set && !best_state.empty()) nn::load_state(model, best_state);
  return result;
}

FinetuneResult finetune_supervised_convnet(const byol::ByolState& state, std::optional<backbone::TapPoint> tap,
                                           const data::Dataset& labeled, const TrainHp& hp,
                                           std::uint64_t init_seed, const TrainHooks& hooks) {
  auto model = convnet_from_byol(state, tap, labeled.num_classes(), init_seed);
  return finetune(*model, labeled, hp, hooks);
}

void save_model(const torch::nn::Module& model, const std::filesystem::path& path, const nlohmann::json& config,
                const std::string& config_hash) {
  Checkpoint ckpt;
  ckpt.kind = kClassifierCheckpointKind;
  ckpt.config_hash = config_hash;
  ckpt.meta = {{"config", config}};
  ckpt.tensors = nn::collect_state(model);
  write_checkpoint(path, ckpt);
}

void load_model(torch::nn::Module& model, const std::filesystem::path& path,
                const std::optional<std::string>& expected_hash) {
  auto ckpt = read_checkpoint(path, expected_hash);
  if (ckpt.kind != kClassifierCheckpointKind) {
    throw CheckpointError("expected a classifier checkpoint, got kind '" + ckpt.kind + "'");
  }
  nn::load_state(model, ckpt.tensors);
}

}  // namespace hybridvit::train
