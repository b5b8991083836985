// Command-line front end: pretrain, finetune, finetune-convnet, sweep, report, selfcheck.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "hybridvit/errors.hpp"
#include "hybridvit/experiments/config.hpp"
#include "hybridvit/experiments/report.hpp"
#include "hybridvit/experiments/runs.hpp"
#include "hybridvit/experiments/selfcheck.hpp"
#include "hybridvit/experiments/sweep.hpp"

namespace {

using namespace hybridvit;
using nlohmann::json;

enum Exit { kOk = 0, kConfigError = 1, kRuntimeFailure = 2, kSelfcheckFailure = 3 };

struct Common {
  std::string config;
  std::string data_root;
  std::optional<std::uint64_t> seed;
  std::string out = "runs";
  std::vector<std::string> sets;
  bool quiet = false;
};

struct Hp {
  std::optional<std::string> aug;
  std::optional<int> epochs;
  std::optional<int> batch;
  std::optional<double> lr;
  std::optional<double> wd;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file (keys not set keep their defaults)");
  cmd->add_option("--data-root", c.data_root, "STL-10 binary directory (default: $HYBRIDVIT_DATA_ROOT)");
  cmd->add_option("--seed", c.seed, "Run seed");
  cmd->add_option("--out", c.out, "Directory for run outputs")->capture_default_str();
  cmd->add_option("--set", c.sets, "Override any config key, e.g. --set finetune.val_fraction=0.2");
  cmd->add_flag("--quiet", c.quiet, "Only print the final result");
}

void add_hp(CLI::App* cmd, Hp& hp) {
  cmd->add_option("--aug", hp.aug, "Augmentation recipe");
  cmd->add_option("--epochs", hp.epochs, "Training epochs");
  cmd->add_option("--batch", hp.batch, "Batch size");
  cmd->add_option("--lr", hp.lr, "Learning rate");
  cmd->add_option("--wd", hp.wd, "Weight decay");
}

json resolve(const Common& c, const Hp& hp, const std::string& section) {
  json cfg = c.config.empty() ? experiments::default_config() : experiments::load_config(c.config);
  if (!c.data_root.empty()) experiments::set_value(cfg, "data.root", c.data_root);
  if (c.seed) experiments::set_value(cfg, "seed", *c.seed);
  if (hp.aug) experiments::set_value(cfg, section + ".aug", *hp.aug);
  if (hp.epochs) experiments::set_value(cfg, section + ".epochs", *hp.epochs);
  if (hp.batch) experiments::set_value(cfg, section + ".batch_size", *hp.batch);
  if (hp.lr) experiments::set_value(cfg, section + ".lr", *hp.lr);
  if (hp.wd) experiments::set_value(cfg, section + ".weight_decay", *hp.wd);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    experiments::set_key(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

experiments::LogFn logger(const Common& c) {
  if (c.quiet) return {};
  return [](const std::string& msg) { std::cerr << msg << std::endl; };
}

}  // namespace

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  CLI::App app{"Hybrid BYOL-ViT experimentation kit"};
  app.require_subcommand(1);

  Common common;
  Hp hp;

  auto* pretrain = app.add_subcommand("pretrain", "Self-supervised BYOL pretraining");
  add_common(pretrain, common);
  add_hp(pretrain, hp);

  std::optional<std::string> kind, model_name, tap, pretrained, init, freeze;
  std::optional<int> patch;
  auto* finetune = app.add_subcommand("finetune", "Train a transformer or hybrid classifier");
  add_common(finetune, common);
  add_hp(finetune, hp);
  finetune->add_option("--kind", kind, "transformer | hybrid");
  finetune->add_option("--model", model_name, "Model name, e.g. ViT-6/16, CVT-2/1, CCT2/3x1");
  finetune->add_option("--tap", tap, "Feature tap for hybrid models (layer1..layer4)");
  finetune->add_option("--patch", patch, "Patch size over the tokenizer input");
  finetune->add_option("--pretrained", pretrained, "BYOL checkpoint for the extractor");
  finetune->add_option("--init", init, "byol | scratch");

  auto* convnet = app.add_subcommand("finetune-convnet", "Fine-tune a ConvNet from a BYOL backbone");
  add_common(convnet, common);
  add_hp(convnet, hp);
  convnet->add_option("--freeze", freeze, "Freeze through this stage (none, layer1..layer4)");
  convnet->add_option("--pretrained", pretrained, "BYOL checkpoint for the backbone");
  convnet->add_option("--init", init, "byol | scratch");

  std::optional<std::string> sweep_kind, sweep_values, sweep_seeds, sweep_epochs;
  auto* sweep = app.add_subcommand("sweep", "Run an experiment grid (resumable)");
  add_common(sweep, common);
  sweep->add_option("--kind", sweep_kind,
                    "patch_sweep | layer_patch_grid | mlp_ablation | batch_sweep | wd_sweep | aug_sweep | backbone_sweep");
  sweep->add_option("--values", sweep_values, "Axis values as a JSON list");
  sweep->add_option("--seeds", sweep_seeds, "Seeds as a JSON list");
  sweep->add_option("--sweep-epochs", sweep_epochs, "BYOL epoch axis as a JSON list");

  std::vector<std::string> report_inputs;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "Markdown tables and SVG plots from results/metrics CSVs");
  report->add_option("inputs", report_inputs, "results.csv / metrics.csv files");
  report->add_option("--out", report_out, "Output directory")->capture_default_str();

  std::uint64_t check_seed = 0;
  auto* selfcheck = app.add_subcommand("selfcheck", "Run the invariant and gradient checks");
  selfcheck->add_option("--seed", check_seed, "Seed for the random instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const auto log = logger(common);
    if (*pretrain) {
      auto cfg = resolve(common, hp, "byol");
      auto data = experiments::load_datasets(cfg, true, false);
      auto outcome = experiments::run_pretrain(cfg, data, common.out, log);
      std::cout << outcome.checkpoint.string() << std::endl;
    } else if (*finetune || *convnet) {
      auto cfg = resolve(common, hp, "finetune");
      if (*convnet) {
        experiments::set_value(cfg, "model.kind", "convnet");
        if (freeze) experiments::set_value(cfg, "model.freeze", *freeze);
      } else {
        if (kind) experiments::set_value(cfg, "model.kind", *kind);
        if (cfg.at("model").at("kind") == "convnet") {
          throw ConfigError("use finetune-convnet for ConvNet models");
        }
        if (model_name) experiments::set_value(cfg, "model.name", *model_name);
        if (tap) experiments::set_value(cfg, "model.tap", *tap);
        if (patch) experiments::set_value(cfg, "model.patch", *patch);
      }
      if (pretrained) experiments::set_value(cfg, "pretrained", *pretrained);
      if (init) experiments::set_value(cfg, "model.init", *init);
      auto result = experiments::run_finetune(cfg, *convnet ? "finetune-convnet" : "finetune", common.out, log);
      std::cout << result.dump(2) << std::endl;
    } else if (*sweep) {
      auto cfg = resolve(common, hp, "finetune");
      auto parse_list = [](const std::string& flag, const std::string& text) {
        try {
          auto j = json::parse(text);
          if (!j.is_array()) throw ConfigError(flag + " expects a JSON list");
          return j;
        } catch (const json::exception&) {
          throw ConfigError(flag + " expects a JSON list, got '" + text + "'");
        }
      };
      if (sweep_kind) experiments::set_value(cfg, "sweep.kind", *sweep_kind);
      if (sweep_values) experiments::set_value(cfg, "sweep.values", parse_list("--values", *sweep_values));
      if (sweep_seeds) experiments::set_value(cfg, "sweep.seeds", parse_list("--seeds", *sweep_seeds));
      if (sweep_epochs) experiments::set_value(cfg, "sweep.epochs", parse_list("--sweep-epochs", *sweep_epochs));
      experiments::SweepHooks hooks;
      hooks.log = log;
      auto [table, dir] = experiments::run_sweep(cfg, common.out, hooks);
      std::cout << (dir / "results.csv").string() << std::endl;
      for (const auto& r : table.rows) {
        if (r.status != "ok") return kRuntimeFailure;
      }
    } else if (*report) {
      std::vector<std::filesystem::path> inputs(report_inputs.begin(), report_inputs.end());
      auto r = experiments::build_report(inputs);
      experiments::write_report(r, report_out);
      std::cout << (std::filesystem::path(report_out) / "report.md").string() << std::endl;
    } else if (*selfcheck) {
      bool ok = true;
      for (const auto& c : experiments::run_selfcheck(check_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")" << std::endl;
        ok = ok && c.passed;
      }
      return ok ? kOk : kSelfcheckFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kRuntimeFailure;
  }
  return kOk;
}
