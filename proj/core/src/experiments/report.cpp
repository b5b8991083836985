#include "hybridvit/experiments/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "hybridvit/errors.hpp"

namespace hybridvit::experiments {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v << "%";
  return os.str();
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<Series>& series, const std::vector<std::string>& x_tick_labels) {
  constexpr double W = 640, H = 400, L = 60, R = 130, T = 40, B = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << escape_xml(title)
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">"
       << fixed(v, 3) << "</text>\n";
  }
  if (!x_tick_labels.empty()) {
    for (std::size_t i = 0; i < x_tick_labels.size(); ++i) {
      const double x = px(static_cast<double>(i));
      os << "<text x=\"" << x << "\" y=\"" << H - B + 14 << "\" text-anchor=\"end\" font-size=\"9\" transform=\"rotate(-45 "
         << x << ' ' << H - B + 14 << ")\">" << escape_xml(x_tick_labels[i]) << "</text>\n";
    }
  } else {
    for (int i = 0; i <= 4; ++i) {
      const double v = x0 + (x1 - x0) * i / 4.0;
      os << "<text x=\"" << px(v) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
         << fixed(v, 1) << "</text>\n";
    }
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
     << escape_xml(x_label) << "</text>\n";
  os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
     << (T + H - B) / 2 << ")\">" << escape_xml(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto* color = kPalette[s % std::size(kPalette)];
    const auto& ser = series[s];
    os << "<g class=\"series\" data-name=\"" << escape_xml(ser.name) << "\">\n<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ser.x.size(); ++i) os << (i ? " " : "") << px(ser.x[i]) << ',' << py(ser.y[i]);
    os << "\"/>\n";
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      os << "<circle cx=\"" << px(ser.x[i]) << "\" cy=\"" << py(ser.y[i]) << "\" r=\"2.5\" fill=\"" << color
         << "\"/>\n";
    }
    os << "</g>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (s + 1) << "\" font-size=\"12\" fill=\"" << color << "\">"
       << escape_xml(ser.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string results_markdown(const ResultsTable& table, const std::string& title) {
  std::ostringstream os;
  os << "## " << title << "\n\n";
  if (table.rows.empty()) {
    os << "_no rows_\n\n";
    return os.str();
  }
  // Axis labels look like "tap=layer2;patch=1"; their keys become columns.
  std::vector<std::string> keys;
  std::vector<std::map<std::string, std::string>> parsed;
  for (const auto& r : table.rows) {
    std::map<std::string, std::string> kv;
    std::stringstream ss(r.axis);
    for (std::string part; std::getline(ss, part, ';');) {
      const auto eq = part.find('=');
      const auto k = part.substr(0, eq);
      kv[k] = eq == std::string::npos ? "" : part.substr(eq + 1);
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    parsed.push_back(std::move(kv));
  }
  for (const auto& k : keys) os << "| " << k << " ";
  os << "| Top-1 Accuracy | Loss | per-seed top-1 | status |\n";
  for (std::size_t i = 0; i < keys.size() + 4; ++i) os << "|---";
  os << "|\n";
  const int best = table.argmax();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const bool bold = static_cast<int>(i) == best;
    for (const auto& k : keys) os << "| " << parsed[i][k] << " ";
    const auto b = bold ? std::string("**") : std::string();
    std::string seeds;
    for (double v : r.per_seed_top1) seeds += (seeds.empty() ? "" : ", ") + pct(v);
    if (r.status == "ok") {
      os << "| " << b << pct(r.mean_top1) << b << " | " << b << fixed(r.mean_loss, 4) << b << " | " << seeds << " | ok |\n";
    } else {
      os << "| - | - | " << seeds << " | failed: " << r.error << " |\n";
    }
  }
  os << '\n';
  return os.str();
}

std::vector<Series> metrics_series(const train::MetricsHistory& history) {
  std::vector<Series> out;
  for (const auto* split : {"train", "val", "test", "pretrain"}) {
    Series s{split, {}, {}};
    for (const auto& r : history.split(split)) {
      s.x.push_back(r.epoch);
      s.y.push_back(r.top1 ? *r.top1 : r.loss);
    }
    if (!s.x.empty()) out.push_back(std::move(s));
  }
  return out;
}

Report build_report(const std::vector<fs::path>& inputs) {
  Report report;
  std::ostringstream md;
  md << "# Experiment report\n\n";
  if (inputs.empty()) {
    md << "> **no runs**: no result or metrics files were given.\n";
    report.markdown = md.str();
    return report;
  }
  int figure = 0;
  for (const auto& path : inputs) {
    const auto text = read_text(path);
    const auto header = text.substr(0, text.find('\n'));
    const auto name = path.parent_path().filename().string() + "/" + path.filename().string();
    ++figure;
    if (header == kResultsHeader) {
      auto table = ResultsTable::from_csv(text);
      md << results_markdown(table, name);
      Series s{"mean top-1", {}, {}};
      std::vector<std::string> ticks;
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].status != "ok") continue;
        s.x.push_back(static_cast<double>(i));
        s.y.push_back(table.rows[i].mean_top1);
      }
      for (const auto& r : table.rows) ticks.push_back(r.axis);
      const auto file = "figure" + std::to_string(figure) + ".svg";
      report.figures.emplace_back(file, line_plot_svg(name, "axis", "top-1", {s}, ticks));
      md << "![" << name << "](" << file << ")\n\n";
    } else if (header == train::kMetricsHeader) {
      auto history = train::MetricsHistory::from_csv(text);
      md << "## " << name << "\n\n";
      md << "| split | epochs | last top-1 | best top-1 | last loss |\n|---|---|---|---|---|\n";
      for (const auto* split : {"train", "val", "test", "pretrain"}) {
        const auto rows = history.split(split);
        if (rows.empty()) continue;
        double best = -1.0;
        for (const auto& r : rows) {
          if (r.top1) best = std::max(best, *r.top1);
        }
        const auto& last = rows.back();
        md << "| " << split << " | " << rows.size() << " | " << (last.top1 ? pct(*last.top1) : "-") << " | "
           << (best >= 0 ? pct(best) : "-") << " | " << fixed(last.loss, 4) << " |\n";
      }
      md << '\n';
      const auto file = "figure" + std::to_string(figure) + ".svg";
      const bool pretrain_only = history.split("train").empty() && !history.split("pretrain").empty();
      report.figures.emplace_back(
          file, line_plot_svg(name, "epoch", pretrain_only ? "loss" : "top-1", metrics_series(history)));
      md << "![" << name << "](" << file << ")\n\n";
    } else {
      throw Error("'" + path.string() + "' is neither a results nor a metrics CSV (header '" + header + "')");
    }
  }
  report.markdown = md.str();
  return report;
}

void write_report(const Report& report, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream(dir / "report.md") << report.markdown;
  for (const auto& [name, svg] : report.figures) std::ofstream(dir / name) << svg;
}

}  // namespace hybridvit::experiments
