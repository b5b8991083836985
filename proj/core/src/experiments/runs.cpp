#include "hybridvit/experiments/runs.hpp"

#include <chrono>
#include <fstream>

#include "hybridvit/errors.hpp"
#include "hybridvit/experiments/config.hpp"
#include "hybridvit/hash.hpp"
#include "hybridvit/nn/layers.hpp"
#include "hybridvit/train/models.hpp"

namespace hybridvit::experiments {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void say(const LogFn& log, const std::string& msg) {
  if (log) log(msg);
}

bool stl10_present(const fs::path& root) {
  const data::Stl10Files files;
  return !root.empty() && fs::exists(root / files.train_images) && fs::exists(root / files.test_images);
}

}  // namespace

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error("cannot write '" + tmp + "'");
    out << j.dump(2) << '\n';
  }
  fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path.string() + "': " + e.what());
  }
}

Datasets load_datasets(const json& config, bool need_unlabeled, bool need_labeled) {
  const auto& d = config.at("data");
  const auto source = d.at("source").get<std::string>();
  if (source != "auto" && source != "stl10" && source != "synthetic") {
    throw ConfigError("data.source must be auto, stl10 or synthetic, got '" + source + "'");
  }
  const auto root = data::resolve_data_root(d.at("root").get<std::string>());
  Datasets out;
  if (source == "stl10" || (source == "auto" && stl10_present(root))) {
    if (root.empty()) throw ConfigError("data.source is stl10 but no data root is set");
    out.source = "stl10";
    out.image_size = data::kStl10Side;
    data::SubsetSpec subset;
    subset.class_filter = d.at("classes").get<std::vector<int>>();
    if (subset.class_filter.empty()) {
      const auto names = data::stl10_default_class_names();
      subset.class_filter = data::default_class_filter(names);
    }
    subset.fraction = d.at("fraction").get<double>();
    subset.seed = config.at("seed").get<std::uint64_t>();
    if (need_unlabeled) out.unlabeled = data::load_stl10(root, data::Split::unlabeled, subset);
    if (need_labeled) {
      out.train = data::load_stl10(root, data::Split::train, subset);
      out.test = data::load_stl10(root, data::Split::test, subset);
    }
    return out;
  }
  const auto& s = d.at("synthetic");
  out.source = "synthetic";
  out.image_size = s.at("image_size").get<int>();
  const int classes = s.at("classes").get<int>();
  const auto seed = s.at("seed").get<std::uint64_t>();
  if (need_unlabeled) {
    out.unlabeled = data::make_synthetic_dataset(s.at("unlabeled").get<int>(), classes, out.image_size,
                                                 mix64(seed ^ 1), data::Split::unlabeled);
  }
  if (need_labeled) {
    out.train = data::make_synthetic_dataset(s.at("train").get<int>(), classes, out.image_size, mix64(seed ^ 2),
                                             data::Split::train);
    out.test = data::make_synthetic_dataset(s.at("test").get<int>(), classes, out.image_size, mix64(seed ^ 3),
                                            data::Split::test);
  }
  return out;
}

fs::path run_dir(const fs::path& out, const std::string& command, const json& config) {
  return out / (command + "-" + config_hash(config).substr(0, 8) + "-s" +
                std::to_string(config.at("seed").get<std::uint64_t>()));
}

json pretrain_identity(const json& config) {
  json id = {{"seed", config.at("seed")}, {"data", config.at("data")}, {"byol", config.at("byol")}};
  id["byol"].erase("save_every");
  return id;
}

PretrainOutcome run_pretrain(const json& config, const Datasets& data, const fs::path& out, const LogFn& log) {
  const auto dir = run_dir(out, "pretrain", pretrain_identity(config));
  fs::create_directories(dir);
  write_json(dir / "config.json", config);
  auto pc = pretrain_config(config);
  pc.checkpoint_dir = pc.save_every > 0 ? dir / "checkpoints" : fs::path{};
  const auto seed = config.at("seed").get<std::uint64_t>();
  say(log, "pretrain: " + std::to_string(data.unlabeled.size()) + " " + data.source + " images, " +
               std::to_string(pc.epochs) + " epochs -> " + dir.string());
  byol::PretrainHooks hooks;
  hooks.on_epoch = [&](int epoch, double loss) {
    say(log, "  epoch " + std::to_string(epoch) + " loss " + std::to_string(loss));
  };
  auto result = byol::pretrain(data.unlabeled, pc, seed, hooks);
  result.history.write_csv(dir / "metrics.csv");
  PretrainOutcome outcome;
  outcome.checkpoint = dir / "byol.ckpt";
  train::write_checkpoint(outcome.checkpoint,
                          byol::save_state(*result.state, result.history, seed, config_hash(byol::to_json(pc))));
  outcome.state = std::move(result.state);
  return outcome;
}

PretrainOutcome ensure_pretrained(const json& config, const Datasets& data, const fs::path& out, const LogFn& log) {
  PretrainOutcome outcome;
  const auto explicit_path = config.at("pretrained").get<std::string>();
  if (!explicit_path.empty()) {
    outcome.checkpoint = explicit_path;
  } else {
    outcome.checkpoint = run_dir(out, "pretrain", pretrain_identity(config)) / "byol.ckpt";
    if (!fs::exists(outcome.checkpoint)) {
      Datasets d = data;
      if (d.unlabeled.empty()) d = load_datasets(config, true, false);
      return run_pretrain(config, d, out, log);
    }
  }
  say(log, "using BYOL checkpoint " + outcome.checkpoint.string());
  outcome.state = byol::load_state(train::read_checkpoint(outcome.checkpoint));
  outcome.reused = true;
  return outcome;
}

bool needs_pretraining(const json& config) {
  const auto& m = config.at("model");
  const auto kind = m.at("kind").get<std::string>();
  return (kind == "hybrid" || kind == "convnet") && m.at("init").get<std::string>() == "byol";
}

std::shared_ptr<nn::ClassifierBase> build_model(const json& config, int image_size, int num_classes,
                                                const byol::ByolState* byol_state) {
  const auto& m = config.at("model");
  const auto kind = m.at("kind").get<std::string>();
  const auto init = m.at("init").get<std::string>();
  if (init != "byol" && init != "scratch") throw ConfigError("model.init must be byol or scratch");
  const auto seed = config.at("seed").get<std::uint64_t>();
  const auto init_seed = mix64(seed ^ 0x1417);
  if (needs_pretraining(config) && byol_state == nullptr) {
    throw ConfigError("model.init is byol but no BYOL state is available");
  }
  std::unique_ptr<byol::ByolState> scratch;
  if ((kind == "hybrid" || kind == "convnet") && init == "scratch") {
    scratch = std::make_unique<byol::ByolState>(pretrain_config(config).model, init_seed);
    byol_state = scratch.get();
  }

  if (kind == "transformer") {
    auto tc = transformer_config(config);
    tc.num_classes = num_classes;
    tc.in_channels = 3;
    tc.in_height = tc.in_width = image_size;
    return std::make_shared<transformers::TransformerClassifierImpl>(tc, init_seed);
  }
  if (kind == "hybrid") {
    const auto tap = backbone::parse_tap(m.at("tap").get<std::string>());
    auto tc = transformer_config(config);
    tc.num_classes = num_classes;
    tc = train::hybrid_head_config(byol_state->config.backbone, tap, image_size, tc);
    return train::attach_frontend(*byol_state, tap, tc, image_size, init_seed).ptr();
  }
  if (kind == "convnet") {
    const auto freeze = m.at("freeze").get<std::string>();
    std::optional<backbone::TapPoint> tap;
    if (freeze != "none") tap = backbone::parse_tap(freeze);
    if (init == "scratch") {
      auto model = std::make_shared<train::ConvNetClassifierImpl>(byol_state->config.backbone, num_classes,
                                                                  init_seed);
      backbone::Backbone b(model->backbone);
      backbone::freeze_through(b, tap);
      return model;
    }
    return train::convnet_from_byol(*byol_state, tap, num_classes, init_seed).ptr();
  }
  throw ConfigError("model.kind must be transformer, hybrid or convnet, got '" + kind + "'");
}

json run_finetune(const json& config, const std::string& command, const fs::path& out, const LogFn& log,
                  const Datasets* preloaded) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = run_dir(out, command, config);
  fs::create_directories(dir);
  write_json(dir / "config.json", config);

  Datasets loaded;
  if (!preloaded) loaded = load_datasets(config, false, true);
  const Datasets& data = preloaded ? *preloaded : loaded;

  PretrainOutcome byol_state;
  if (needs_pretraining(config)) byol_state = ensure_pretrained(config, data, out, log);

  auto model = build_model(config, data.image_size, data.train.num_classes(), byol_state.state.get());
  auto hp = train_hp(config);
  if (hp.save_every > 0) hp.checkpoint_dir = dir / "checkpoints";
  say(log, command + ": " + std::to_string(data.train.size()) + " train / " + std::to_string(data.test.size()) +
               " test " + data.source + " images, " + std::to_string(nn::count_trainable(*model)) +
               " trainable parameters -> " + dir.string());

  train::TrainHooks hooks;
  hooks.on_record = [&](const train::MetricsRecord& r) {
    if (r.split == "val" || hp.val_fraction == 0.0) {
      say(log, "  epoch " + std::to_string(r.epoch) + " " + r.split + " top1 " + std::to_string(*r.top1) +
                   " loss " + std::to_string(r.loss));
    }
  };
  auto result = train::finetune(*model, data.train, hp, hooks);
  auto test = train::evaluate(*model, data.test);
  auto history = result.history;
  const auto wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  history.add({result.best_epoch, "test", test.top1, test.loss, hp.lr,
               wall});
  history.write_csv(dir / "metrics.csv");
  train::save_model(*model, dir / "model.ckpt", config, config_hash(config));

  json r = {{"status", "ok"},
            {"test_top1", test.top1},
            {"test_loss", test.loss},
            {"best_epoch", result.best_epoch},
            {"runtime_seconds", wall},
            {"trainable_parameters", nn::count_trainable(*model)},
            {"data_source", data.source},
            {"run_dir", dir.string()}};
  if (result.best_val_top1) r["best_val_top1"] = *result.best_val_top1;
  if (auto last = history.last("train")) r["final_train_top1"] = *last->top1;
  write_json(dir / "result.json", r);
  return r;
}

}  // namespace hybridvit::experiments
