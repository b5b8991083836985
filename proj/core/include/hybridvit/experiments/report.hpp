#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hybridvit/experiments/sweep.hpp"
#include "hybridvit/train/metrics.hpp"

namespace hybridvit::experiments {

/// One named data series for an SVG line plot.
struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG with one polyline and one marker per point for each series.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series, const std::vector<std::string>& x_tick_labels = {});

/// Markdown table of a results table with the best ok row in bold.
std::string results_markdown(const ResultsTable& table, const std::string& title);

/// Train/val/test top-1 curves over epochs.
std::vector<Series> metrics_series(const train::MetricsHistory& history);

struct Report {
  std::string markdown;
  /// (file name, SVG text) pairs referenced from the markdown.
  std::vector<std::pair<std::string, std::string>> figures;
};

/// Builds a report from results.csv and metrics.csv files; the CSV kind is
/// told apart by its header. An empty input list yields a "no runs" report.
Report build_report(const std::vector<std::filesystem::path>& inputs);

/// Writes report.md and the figures into `dir`.
void write_report(const Report& report, const std::filesystem::path& dir);

}  // namespace hybridvit::experiments
