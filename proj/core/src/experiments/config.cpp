#include "hybridvit/experiments/config.hpp"

#include <fstream>
#include <sstream>

#include "hybridvit/errors.hpp"

namespace hybridvit::experiments {

using nlohmann::json;

const json& default_config() {
  static const json defaults = json::parse(R"({
    "seed": 0,
    "data": {
      "source": "auto",
      "root": "",
      "classes": [],
      "fraction": 1.0,
      "synthetic": {"classes": 5, "unlabeled": 255, "train": 100, "test": 250, "image_size": 96, "seed": 7}
    },
    "byol": {
      "backbone": "r50",
      "width_multiplier": 0.125,
      "zero_init_residual": true,
      "hidden_dim": 512,
      "proj_dim": 64,
      "slope": 0.01,
      "tau": 0.99,
      "tau_schedule": "constant",
      "lr": 1e-4,
      "weight_decay": 5e-2,
      "aug": "data_aug_5",
      "epochs": 50,
      "batch_size": 16,
      "save_every": 0
    },
    "finetune": {
      "lr": 1e-4,
      "weight_decay": 5e-2,
      "batch_size": 128,
      "epochs": 100,
      "aug": "aug_3",
      "label_smoothing": 0.0,
      "val_fraction": 0.1,
      "save_every": 0
    },
    "model": {
      "kind": "hybrid",
      "name": "",
      "init": "byol",
      "tap": "layer2",
      "freeze": "layer2",
      "depth": 6,
      "heads": 4,
      "dim": 128,
      "mlp_ratio": 2.0,
      "head_kind": "class_token",
      "tokenizer": "patchify",
      "patch": 1,
      "conv": {"layers": 1, "kernel": 3, "stride": 1, "pool_kernel": 3, "pool_stride": 2, "hidden_channels": 64}
    },
    "pretrained": "",
    "sweep": {"kind": "", "values": [], "epochs": [], "seeds": [0, 1, 2]}
  })");
  return defaults;
}

namespace {

void merge_into(json& base, const json& overrides, const std::string& path) {
  if (!overrides.is_object()) throw ConfigError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : overrides.items()) {
    const auto full = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + full + "'");
    auto& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, full);
    } else {
      const bool numeric = slot.is_number() && value.is_number();
      if (!numeric && slot.type() != value.type() && !(slot.is_array() && value.is_array())) {
        throw ConfigError("config key '" + full + "' expects " + std::string(slot.type_name()) + ", got " +
                          value.type_name());
      }
      slot = value;
    }
  }
}

}  // namespace

json merge_config(const json& base, const json& overrides) {
  json out = base;
  merge_into(out, overrides, "");
  return out;
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return merge_config(default_config(), j);
}

void set_value(json& config, const std::string& dotted_key, const json& value) {
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(dotted_key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  if (parts.empty()) throw ConfigError("empty config key");
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  config = merge_config(config, patch);
}

void set_key(json& config, const std::string& dotted_key, const std::string& value_text) {
  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::exception&) {
    value = value_text;
  }
  set_value(config, dotted_key, value);
}

byol::PretrainConfig pretrain_config(const json& config) {
  const auto& b = config.at("byol");
  byol::PretrainConfig pc;
  json model = b;
  for (const auto* k : {"aug", "epochs", "batch_size", "save_every"}) model.erase(k);
  pc.model = byol::byol_config_from_json(model);
  pc.aug = b.at("aug").get<std::string>();
  pc.epochs = b.at("epochs").get<int>();
  pc.batch_size = b.at("batch_size").get<int>();
  pc.save_every = b.at("save_every").get<int>();
  return pc;
}

train::TrainHp train_hp(const json& config) {
  const auto& f = config.at("finetune");
  train::TrainHp hp;
  hp.lr = f.at("lr").get<double>();
  hp.weight_decay = f.at("weight_decay").get<double>();
  hp.batch_size = f.at("batch_size").get<int>();
  hp.epochs = f.at("epochs").get<int>();
  hp.aug = f.at("aug").get<std::string>();
  hp.label_smoothing = f.at("label_smoothing").get<double>();
  hp.val_fraction = f.at("val_fraction").get<double>();
  hp.save_every = f.at("save_every").get<int>();
  hp.seed = config.at("seed").get<std::uint64_t>();
  hp.validate();
  return hp;
}

transformers::TransformerConfig transformer_config(const json& config) {
  const auto& m = config.at("model");
  transformers::TransformerConfig tc;
  tc.depth = m.at("depth").get<int64_t>();
  tc.heads = m.at("heads").get<int64_t>();
  tc.dim = m.at("dim").get<int64_t>();
  tc.mlp_ratio = m.at("mlp_ratio").get<double>();
  const auto head = m.at("head_kind").get<std::string>();
  if (head != "class_token" && head != "seq_pool") throw ConfigError("model.head_kind: unknown value '" + head + "'");
  tc.head_kind = head == "class_token" ? transformers::HeadKind::class_token : transformers::HeadKind::seq_pool;
  const auto tok = m.at("tokenizer").get<std::string>();
  if (tok != "patchify" && tok != "conv") throw ConfigError("model.tokenizer: unknown value '" + tok + "'");
  tc.tokenizer = tok == "patchify" ? transformers::TokenizerKind::patchify : transformers::TokenizerKind::conv;
  tc.patch = m.at("patch").get<int64_t>();
  const auto& c = m.at("conv");
  tc.conv.layers = c.at("layers").get<int>();
  tc.conv.kernel = c.at("kernel").get<int>();
  tc.conv.stride = c.at("stride").get<int>();
  tc.conv.pool_kernel = c.at("pool_kernel").get<int>();
  tc.conv.pool_stride = c.at("pool_stride").get<int>();
  tc.conv.hidden_channels = c.at("hidden_channels").get<int64_t>();
  const auto name = m.at("name").get<std::string>();
  if (!name.empty()) tc = transformers::config_from_name(name, tc);
  return tc;
}

}  // namespace hybridvit::experiments
