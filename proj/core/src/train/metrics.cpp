#include "hybridvit/train/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "hybridvit/errors.hpp"

namespace hybridvit::train {

void MetricsHistory::add(MetricsRecord record) {
  if (!std::isfinite(record.loss)) throw Error("metrics: loss must be finite");
  if (record.top1 && (*record.top1 < 0.0 || *record.top1 > 1.0)) {
    throw Error("metrics: top1 must be in [0, 1]");
  }
  if (auto prev = last(record.split); prev && prev->epoch >= record.epoch) {
    throw Error("metrics: epochs must increase within split '" + record.split + "'");
  }
  records_.push_back(std::move(record));
}

std::vector<MetricsRecord> MetricsHistory::split(const std::string& name) const {
  std::vector<MetricsRecord> out;
  for (const auto& r : records_) {
    if (r.split == name) out.push_back(r);
  }
  return out;
}

std::optional<MetricsRecord> MetricsHistory::last(const std::string& name) const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->split == name) return *it;
  }
  return std::nullopt;
}

std::string MetricsHistory::to_csv() const {
  std::ostringstream os;
  os << kMetricsHeader << '\n' << std::setprecision(17);
  for (const auto& r : records_) {
    os << r.epoch << ',' << r.split << ',';
    if (r.top1) os << *r.top1;
    os << ',' << r.loss << ',' << r.lr << ',' << r.wall_seconds << '\n';
  }
  return os.str();
}

MetricsHistory MetricsHistory::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kMetricsHeader) {
    throw Error("metrics CSV: header must be '" + std::string(kMetricsHeader) + "'");
  }
  MetricsHistory out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() == 5 && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw Error("metrics CSV: expected 6 fields in '" + line + "'");
    MetricsRecord r;
    try {
      r.epoch = std::stoi(f[0]);
      r.split = f[1];
      if (!f[2].empty()) r.top1 = std::stod(f[2]);
      r.loss = std::stod(f[3]);
      r.lr = std::stod(f[4]);
      r.wall_seconds = std::stod(f[5]);
    } catch (const std::logic_error&) {
      throw Error("metrics CSV: unparsable row '" + line + "'");
    }
    out.add(std::move(r));
  }
  return out;
}

void MetricsHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << to_csv();
}

MetricsHistory MetricsHistory::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

}  // namespace hybridvit::train
