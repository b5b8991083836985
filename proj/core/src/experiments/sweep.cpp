#include "hybridvit/experiments/sweep.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hybridvit/augment/pipeline.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/experiments/config.hpp"
#include "hybridvit/hash.hpp"

namespace hybridvit::experiments {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<SweepKind, std::string_view> kKindNames[] = {
    {SweepKind::patch_sweep, "patch_sweep"},       {SweepKind::layer_patch_grid, "layer_patch_grid"},
    {SweepKind::mlp_ablation, "mlp_ablation"},     {SweepKind::batch_sweep, "batch_sweep"},
    {SweepKind::wd_sweep, "wd_sweep"},             {SweepKind::aug_sweep, "aug_sweep"},
    {SweepKind::backbone_sweep, "backbone_sweep"}};

std::string value_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

std::string label_of(const json& axis) {
  std::string out;
  for (const auto& [k, v] : axis.items()) out += (out.empty() ? "" : ";") + k + "=" + value_text(v);
  return out;
}

std::vector<int> default_epoch_axis() { return {100, 200, 300, 400, 500}; }

void check_patch(const json& config, int patch) {
  const auto& m = config.at("model");
  int side = config.at("data").at("source").get<std::string>() == "stl10"
                 ? data::kStl10Side
                 : config.at("data").at("synthetic").at("image_size").get<int>();
  if (m.at("kind").get<std::string>() == "hybrid") {
    auto pc = pretrain_config(config);
    const auto shape =
        backbone::feature_shape(pc.model.backbone, backbone::parse_tap(m.at("tap").get<std::string>()), side);
    side = static_cast<int>(shape.height);
  }
  if (patch < 1 || patch > side) {
    throw ConfigError("patch " + std::to_string(patch) + " does not fit a " + std::to_string(side) + "x" +
                      std::to_string(side) + " map");
  }
}

}  // namespace

std::string_view to_string(SweepKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "?";
}

SweepKind parse_sweep_kind(std::string_view name) {
  for (const auto& [kind, n] : kKindNames) {
    if (n == name) return kind;
  }
  std::string valid;
  for (const auto& [kind, n] : kKindNames) valid += (valid.empty() ? "" : ", ") + std::string(n);
  throw ConfigError("unknown sweep kind '" + std::string(name) + "' (valid: " + valid + ")");
}

std::vector<std::pair<backbone::TapPoint, int>> layer_patch_rows() {
  using backbone::TapPoint;
  std::vector<std::pair<TapPoint, int>> rows;
  for (int p : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 18, 24}) rows.emplace_back(TapPoint::layer1, p);
  for (int p = 1; p <= 12; ++p) rows.emplace_back(TapPoint::layer2, p);
  for (int p = 1; p <= 6; ++p) rows.emplace_back(TapPoint::layer3, p);
  for (int p = 1; p <= 3; ++p) rows.emplace_back(TapPoint::layer4, p);
  return rows;
}

std::vector<int> raw_patch_sizes() { return {8, 12, 16, 22, 24, 32, 48}; }

SweepSpec sweep_spec(const json& config) {
  const auto& s = config.at("sweep");
  SweepSpec spec;
  spec.kind = parse_sweep_kind(s.at("kind").get<std::string>());
  spec.values = s.at("values");
  spec.epochs = s.at("epochs").get<std::vector<int>>();
  spec.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
  if (spec.seeds.empty()) throw ConfigError("sweep.seeds must not be empty");
  spec.base = config;
  spec.base["sweep"] = default_config().at("sweep");

  if (spec.values.empty()) {
    switch (spec.kind) {
      case SweepKind::patch_sweep:
        if (config.at("model").at("kind").get<std::string>() == "hybrid") {
          const auto tap = backbone::parse_tap(config.at("model").at("tap").get<std::string>());
          for (const auto& [t, p] : layer_patch_rows()) {
            if (t == tap) spec.values.push_back(p);
          }
        } else {
          spec.values = raw_patch_sizes();
        }
        break;
      case SweepKind::layer_patch_grid:
        for (const auto& [t, p] : layer_patch_rows()) spec.values.push_back({std::string(backbone::to_string(t)), p});
        break;
      case SweepKind::mlp_ablation: spec.values = {0.0, 0.01}; break;
      case SweepKind::batch_sweep: spec.values = {8, 16, 32, 64, 128, 256}; break;
      case SweepKind::wd_sweep: spec.values = {5e-1, 5e-2, 5e-3, 5e-4}; break;
      case SweepKind::aug_sweep:
        spec.values = {"baseline", "data_aug_1", "data_aug_2", "data_aug_3", "data_aug_4", "data_aug_5"};
        break;
      case SweepKind::backbone_sweep: spec.values = {"r18", "r50", "wide50"}; break;
    }
  }
  if (spec.epochs.empty() && (spec.kind == SweepKind::mlp_ablation || spec.kind == SweepKind::batch_sweep)) {
    spec.epochs = default_epoch_axis();
  }
  return spec;
}

std::vector<SweepCell> expand(const SweepSpec& spec) {
  std::vector<SweepCell> cells;
  auto add = [&](json axis) {
    SweepCell cell;
    cell.config = spec.base;
    for (const auto& [key, value] : axis.items()) set_value(cell.config, key, value);
    cell.axis = std::move(axis);
    cell.id = config_hash(cell.axis).substr(0, 8);
    cell.label = label_of(cell.axis);
    cells.push_back(std::move(cell));
  };
  const std::vector<int> epochs = spec.epochs.empty() ? std::vector<int>{0} : spec.epochs;
  for (int ep : epochs) {
    for (const auto& v : spec.values) {
      json axis = json::object();
      switch (spec.kind) {
        case SweepKind::patch_sweep:
          check_patch(spec.base, v.get<int>());
          axis["model.patch"] = v;
          break;
        case SweepKind::layer_patch_grid: {
          if (!v.is_array() || v.size() != 2) throw ConfigError("layer_patch_grid values are [tap, patch] pairs");
          axis["model.kind"] = "hybrid";
          axis["model.tap"] = v[0];
          axis["model.patch"] = v[1];
          json probe = spec.base;
          for (const auto& [key, value] : axis.items()) set_value(probe, key, value);
          check_patch(probe, v[1].get<int>());
          break;
        }
        case SweepKind::mlp_ablation:
          if (!v.is_number() || v.get<double>() < 0.0) throw ConfigError("mlp_ablation values are slopes >= 0");
          axis["byol.slope"] = v;
          break;
        case SweepKind::batch_sweep:
          if (!v.is_number_integer() || v.get<int>() < 2) throw ConfigError("batch_sweep values are integers >= 2");
          axis["byol.batch_size"] = v;
          break;
        case SweepKind::wd_sweep:
          if (!v.is_number() || v.get<double>() < 0.0) throw ConfigError("wd_sweep values are weight decays >= 0");
          axis["byol.weight_decay"] = v;
          break;
        case SweepKind::aug_sweep: {
          const auto name = v.get<std::string>();
          augment::build_pipeline(name);
          const bool self_supervised = name == "baseline" || name.starts_with("data_aug_");
          axis[self_supervised ? "byol.aug" : "finetune.aug"] = name;
          break;
        }
        case SweepKind::backbone_sweep:
          backbone::parse_family(v.get<std::string>());
          axis["byol.backbone"] = v;
          break;
      }
      if (ep > 0) axis["byol.epochs"] = ep;
      add(std::move(axis));
    }
  }
  return cells;
}

std::string ResultsTable::to_csv() const {
  std::ostringstream os;
  os << kResultsHeader << '\n' << std::setprecision(10);
  for (const auto& r : rows) {
    os << r.cell_id << ',' << r.axis << ',' << r.mean_top1 << ',' << r.mean_loss << ',';
    for (std::size_t i = 0; i < r.per_seed_top1.size(); ++i) os << (i ? ";" : "") << r.per_seed_top1[i];
    std::string err = r.error;
    for (auto& ch : err) {
      if (ch == ',' || ch == '\n') ch = ' ';
    }
    os << ',' << r.runtime_seconds << ',' << r.status << ',' << err << '\n';
  }
  return os.str();
}

ResultsTable ResultsTable::from_csv(const std::string& text, std::string kind) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader) {
    throw Error("results CSV: header must be '" + std::string(kResultsHeader) + "'");
  }
  ResultsTable t;
  t.kind = std::move(kind);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 8) throw Error("results CSV: expected 8 fields in '" + line + "'");
    ResultRow r;
    try {
      r.cell_id = f[0];
      r.axis = f[1];
      r.mean_top1 = std::stod(f[2]);
      r.mean_loss = std::stod(f[3]);
      std::stringstream ps(f[4]);
      for (std::string v; std::getline(ps, v, ';');) r.per_seed_top1.push_back(std::stod(v));
      r.runtime_seconds = std::stod(f[5]);
    } catch (const std::logic_error&) {
      throw Error("results CSV: unparsable row '" + line + "'");
    }
    r.status = f[6];
    r.error = f[7];
    t.rows.push_back(std::move(r));
  }
  return t;
}

int ResultsTable::argmax() const {
  int best = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].status != "ok") continue;
    if (best < 0 || rows[i].mean_top1 > rows[best].mean_top1) best = static_cast<int>(i);
  }
  return best;
}

std::pair<ResultsTable, fs::path> run_sweep(const json& config, const fs::path& out, const SweepHooks& hooks,
                                            CellRunner runner) {
  const auto spec = sweep_spec(config);
  const auto cells = expand(spec);
  json identity = config;
  identity.erase("seed");
  const auto dir = out / ("sweep-" + std::string(to_string(spec.kind)) + "-" + config_hash(identity).substr(0, 8));
  fs::create_directories(dir / "cells");
  write_json(dir / "config.json", config);
  if (!runner) {
    runner = [&](const json& cfg, const fs::path& o) { return run_finetune(cfg, "finetune", o, hooks.log); };
  }

  ResultsTable table;
  table.kind = std::string(to_string(spec.kind));
  for (const auto& cell : cells) {
    ResultRow row;
    row.cell_id = cell.id;
    row.axis = cell.label;
    row.status = "ok";
    double loss_sum = 0.0;
    for (auto seed : spec.seeds) {
      const auto result_path = dir / "cells" / (cell.id + "-s" + std::to_string(seed) + ".json");
      json result;
      if (fs::exists(result_path)) {
        result = read_json(result_path);
        if (result.value("status", "") != "ok") result = json();
      }
      if (result.is_null()) {
        if (hooks.on_run) hooks.on_run(cell, seed);
        if (hooks.log) hooks.log("sweep cell " + cell.label + " seed " + std::to_string(seed));
        json cfg = cell.config;
        cfg["seed"] = seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          result = runner(cfg, dir / "runs");
          result["status"] = "ok";
        } catch (const std::exception& e) {
          result = {{"status", "failed"}, {"error", e.what()}};
          if (hooks.log) hooks.log("  failed: " + std::string(e.what()));
        }
        result["axis"] = cell.axis;
        result["seed"] = seed;
        if (!result.contains("runtime_seconds")) {
          result["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        write_json(result_path, result);
      }
      if (result.at("status") != "ok") {
        row.status = "failed";
        row.error = result.value("error", "");
        continue;
      }
      row.per_seed_top1.push_back(result.at("test_top1").get<double>());
      loss_sum += result.at("test_loss").get<double>();
      row.runtime_seconds += result.value("runtime_seconds", 0.0);
    }
    if (!row.per_seed_top1.empty()) {
      double s = 0.0;
      for (double v : row.per_seed_top1) s += v;
      row.mean_top1 = s / static_cast<double>(row.per_seed_top1.size());
      row.mean_loss = loss_sum / static_cast<double>(row.per_seed_top1.size());
    }
    table.rows.push_back(std::move(row));
  }
  std::ofstream(dir / "results.csv") << table.to_csv();
  return {table, dir};
}

}  // namespace hybridvit::experiments
