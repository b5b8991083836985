#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "hybridvit/byol/pretrain.hpp"
#include "hybridvit/data/dataset.hpp"
#include "hybridvit/nn/classifier.hpp"
#include "hybridvit/train/trainer.hpp"

namespace hybridvit::experiments {

using LogFn = std::function<void(const std::string&)>;

struct Datasets {
  data::Dataset unlabeled;
  data::Dataset train;
  data::Dataset test;
  /// "stl10" or "synthetic".
  std::string source;
  int image_size = 96;
};

/// Loads the splits named by the data section. With source "auto" STL-10
/// is used when its files are under the resolved root, synthetic data otherwise.
Datasets load_datasets(const nlohmann::json& config, bool need_unlabeled, bool need_labeled);

/// `<out>/<command>-<first 8 hash digits>-s<seed>`.
std::filesystem::path run_dir(const std::filesystem::path& out, const std::string& command,
                              const nlohmann::json& config);

/// Keys that determine a BYOL run: byol and data sections plus the seed.
nlohmann::json pretrain_identity(const nlohmann::json& config);

struct PretrainOutcome {
  std::unique_ptr<byol::ByolState> state;
  std::filesystem::path checkpoint;
  bool reused = false;
};

/// Runs BYOL pretraining into its run dir (config.json, metrics.csv, byol.ckpt).
PretrainOutcome run_pretrain(const nlohmann::json& config, const Datasets& data,
                             const std::filesystem::path& out, const LogFn& log = {});

/// The BYOL state a fine-tune needs: the `pretrained` checkpoint when set,
/// else a finished pretrain run dir for the same identity, else a new run.
PretrainOutcome ensure_pretrained(const nlohmann::json& config, const Datasets& data,
                                  const std::filesystem::path& out, const LogFn& log = {});

/// Builds the classifier described by the model section. `byol_state` is
/// required for models initialized from BYOL.
std::shared_ptr<nn::ClassifierBase> build_model(const nlohmann::json& config, int image_size,
                                                int num_classes, const byol::ByolState* byol_state);

/// Whether the model section needs a BYOL backbone.
bool needs_pretraining(const nlohmann::json& config);

/// Supervised run: writes config.json, metrics.csv and result.json into
/// its run dir and returns the result object
/// (status, test_top1, test_loss, best_epoch, best_val_top1, runtime_seconds, ...).
nlohmann::json run_finetune(const nlohmann::json& config, const std::string& command,
                            const std::filesystem::path& out, const LogFn& log = {},
                            const Datasets* preloaded = nullptr);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace hybridvit::experiments
