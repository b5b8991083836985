#include <cmath>

#include "hybridvit/data/dataset.hpp"
#include "hybridvit/errors.hpp"

namespace hybridvit::data {

ChannelStats dataset_stats(const Dataset& dataset) {
  if (dataset.empty()) throw Error("dataset_stats: empty dataset");
  const int channels = dataset.images.front().channels();
  std::vector<double> sum(channels, 0.0);
  std::vector<double> sum_sq(channels, 0.0);
  std::vector<double> count(channels, 0.0);
  for (const auto& img : dataset.images) {
    if (img.channels() != channels) throw ShapeError("dataset_stats: mixed channel counts");
    for (int c = 0; c < channels; ++c) {
      for (float v : img.plane(c)) {
        sum[c] += v;
        sum_sq[c] += static_cast<double>(v) * v;
      }
      count[c] += static_cast<double>(img.plane(c).size());
    }
  }
  ChannelStats out;
  for (int c = 0; c < channels; ++c) {
    const double mean = sum[c] / count[c];
    const double var = std::max(0.0, sum_sq[c] / count[c] - mean * mean);
    out.mean.push_back(mean);
    out.std.push_back(std::sqrt(var));
  }
  return out;
}

}  // namespace hybridvit::data
