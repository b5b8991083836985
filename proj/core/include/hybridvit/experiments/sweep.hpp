#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridvit/backbone/config.hpp"
#include "hybridvit/experiments/runs.hpp"

namespace hybridvit::experiments {

enum class SweepKind { patch_sweep, layer_patch_grid, mlp_ablation, batch_sweep, wd_sweep, aug_sweep, backbone_sweep };

std::string_view to_string(SweepKind k);
SweepKind parse_sweep_kind(std::string_view name);

/// The (tap, patch) rows of the feature-map patch grid, 37 in total.
std::vector<std::pair<backbone::TapPoint, int>> layer_patch_rows();

/// Patch sizes for raw-image patch sweeps.
std::vector<int> raw_patch_sizes();

struct SweepCell {
  /// Axis assignment, e.g. {"tap": "layer2", "patch": 1}.
  nlohmann::json axis;
  /// Full config for the cell with the axis applied (seed not yet set).
  nlohmann::json config;
  /// Stable id derived from the axis values.
  std::string id;
  /// "tap=layer2;patch=1".
  std::string label;
};

struct SweepSpec {
  SweepKind kind = SweepKind::patch_sweep;
  nlohmann::json values = nlohmann::json::array();
  std::vector<int> epochs;
  std::vector<std::uint64_t> seeds;
  nlohmann::json base;
};

/// Reads the sweep section of a resolved config, filling per-kind default axes.
SweepSpec sweep_spec(const nlohmann::json& config);

/// Cells in axis order. ConfigError for values that do not fit the kind.
std::vector<SweepCell> expand(const SweepSpec& spec);

struct ResultRow {
  std::string cell_id;
  std::string axis;
  double mean_top1 = 0.0;
  double mean_loss = 0.0;
  std::vector<double> per_seed_top1;
  double runtime_seconds = 0.0;
  std::string status;  // ok | failed
  std::string error;

  bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* kResultsHeader =
    "cell_id,axis,mean_top1,mean_loss,per_seed_top1,runtime_seconds,status,error";

struct ResultsTable {
  std::string kind;
  std::vector<ResultRow> rows;

  std::string to_csv() const;
  static ResultsTable from_csv(const std::string& text, std::string kind = "");
  /// Index of the best ok row by mean top-1 (first on ties), -1 if none.
  int argmax() const;
};

/// Trains and evaluates one (cell, seed); returns an object with at least
/// test_top1 and test_loss.
using CellRunner = std::function<nlohmann::json(const nlohmann::json& config, const std::filesystem::path& out)>;

struct SweepHooks {
  LogFn log;
  /// Called before every (cell, seed) that actually runs.
  std::function<void(const SweepCell&, std::uint64_t seed)> on_run;
};

/// Runs every (cell, seed) not already finished under the sweep dir and
/// writes results.csv there. A failing run marks its row failed and the
/// sweep moves on. Returns the table and the sweep dir.
std::pair<ResultsTable, std::filesystem::path> run_sweep(const nlohmann::json& config,
                                                         const std::filesystem::path& out,
                                                         const SweepHooks& hooks = {},
                                                         CellRunner runner = {});

}  // namespace hybridvit::experiments
