#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridvit/byol/pretrain.hpp"
#include "hybridvit/train/trainer.hpp"
#include "hybridvit/transformers/classifier.hpp"

namespace hybridvit::experiments {

/// Every accepted key with its default value. A config file may set any
/// subset of these; any other key is rejected.
const nlohmann::json& default_config();

/// Recursively overlays `overrides` onto `base`. Keys absent from `base`
/// raise ConfigError naming the dotted key path.
nlohmann::json merge_config(const nlohmann::json& base, const nlohmann::json& overrides);

/// Parses a JSON config file and overlays it on the defaults.
nlohmann::json load_config(const std::filesystem::path& path);

/// Sets one dotted key ("finetune.lr") from text. The text is read as JSON
/// when it parses, otherwise taken as a string. Unknown keys are rejected.
void set_key(nlohmann::json& config, const std::string& dotted_key, const std::string& value_text);

/// Same as set_key with an already typed value.
void set_value(nlohmann::json& config, const std::string& dotted_key, const nlohmann::json& value);

/// Typed views of a resolved config.
byol::PretrainConfig pretrain_config(const nlohmann::json& config);
train::TrainHp train_hp(const nlohmann::json& config);
/// Transformer head for the model section; input shape is left to the caller.
transformers::TransformerConfig transformer_config(const nlohmann::json& config);

}  // namespace hybridvit::experiments
