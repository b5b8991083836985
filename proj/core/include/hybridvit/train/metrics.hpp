#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hybridvit::train {

/// One row of the metrics CSV.
struct MetricsRecord {
  int epoch = 0;
  std::string split;          // train | val | test | pretrain
  std::optional<double> top1;  // absent for self-supervised rows
  double loss = 0.0;
  double lr = 0.0;
  double wall_seconds = 0.0;

  bool operator==(const MetricsRecord&) const = default;
};

/// Exact header line of every metrics CSV.
inline constexpr const char* kMetricsHeader = "epoch,split,top1,loss,lr,wall_seconds";

class MetricsHistory {
 public:
  /// Rejects non-finite losses, top1 outside [0, 1], and epochs that do not
  /// increase within a split.
  void add(MetricsRecord record);

  const std::vector<MetricsRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t size() const noexcept { return records_.size(); }

  std::vector<MetricsRecord> split(const std::string& name) const;
  std::optional<MetricsRecord> last(const std::string& name) const;

  std::string to_csv() const;
  static MetricsHistory from_csv(const std::string& text);
  void write_csv(const std::filesystem::path& path) const;
  static MetricsHistory read_csv(const std::filesystem::path& path);

 private:
  std::vector<MetricsRecord> records_;
};

}  // namespace hybridvit::train
