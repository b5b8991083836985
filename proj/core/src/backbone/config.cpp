#include "hybridvit/backbone/config.hpp"

#include <algorithm>
#include <cmath>

#include "hybridvit/errors.hpp"

namespace hybridvit::backbone {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::r18: return "r18";
    case Family::r50: return "r50";
    case Family::wide50: return "wide50";
    case Family::wide101: return "wide101";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  if (name == "r18") return Family::r18;
  if (name == "r50") return Family::r50;
  if (name == "wide50") return Family::wide50;
  if (name == "wide101") return Family::wide101;
  throw ConfigError("unknown backbone family '" + std::string(name) +
                    "' (valid: r18, r50, wide50, wide101)");
}

std::string_view to_string(TapPoint t) {
  switch (t) {
    case TapPoint::layer1: return "layer1";
    case TapPoint::layer2: return "layer2";
    case TapPoint::layer3: return "layer3";
    case TapPoint::layer4: return "layer4";
  }
  return "?";
}

TapPoint parse_tap(std::string_view name) {
  if (name == "layer1") return TapPoint::layer1;
  if (name == "layer2") return TapPoint::layer2;
  if (name == "layer3") return TapPoint::layer3;
  if (name == "layer4") return TapPoint::layer4;
  throw ConfigError("unknown tap point '" + std::string(name) +
                    "' (valid: layer1, layer2, layer3, layer4)");
}

FamilyLayout layout(Family family) {
  switch (family) {
    case Family::r18: return {false, {2, 2, 2, 2}, 1};
    case Family::r50: return {true, {3, 4, 6, 3}, 1};
    case Family::wide50: return {true, {3, 4, 6, 3}, 2};
    case Family::wide101: return {true, {3, 4, 23, 3}, 2};
  }
  throw ConfigError("unknown backbone family");
}

int scaled_channels(int channels, double multiplier) {
  if (!(multiplier > 0.0)) throw ConfigError("width_multiplier must be positive");
  const double scaled = channels * multiplier / kChannelDivisor;
  const long units = std::max(1L, std::lround(scaled));
  return static_cast<int>(units) * kChannelDivisor;
}

StageWidths stage_widths(const BackboneConfig& config) {
  const auto lay = layout(config.family);
  const std::array<int, 4> planes{64, 128, 256, 512};
  StageWidths w{};
  w.stem = scaled_channels(64, config.width_multiplier);
  for (int s = 0; s < 4; ++s) {
    w.inner[s] = scaled_channels(planes[s] * lay.inner_width_factor, config.width_multiplier);
    w.output[s] = scaled_channels(planes[s] * (lay.bottleneck ? 4 : 1), config.width_multiplier);
  }
  return w;
}

int tap_stride(TapPoint tap) { return 2 << stage_index(tap); }

FeatureShape feature_shape(const BackboneConfig& config, TapPoint tap, int input_hw) {
  if (input_hw < tap_stride(tap)) {
    throw ShapeError("input " + std::to_string(input_hw) + " too small for " +
                     std::string(to_string(tap)) + " (stride " + std::to_string(tap_stride(tap)) +
                     ")");
  }
  int side = input_hw;
  // stem conv + max-pool, then one stride-2 step per stage after the first
  const int halvings = 2 + (stage_index(tap) - 1);
  for (int i = 0; i < halvings; ++i) side = (side + 1) / 2;
  const auto widths = stage_widths(config);
  return {widths.output[stage_index(tap) - 1], side, side};
}

namespace {

int64_t bn(int64_t c) { return 2 * c; }
int64_t conv(int64_t in, int64_t out, int64_t k) { return in * out * k * k; }

int64_t stage_params(const FamilyLayout& lay, int in, int inner, int out, int blocks) {
  int64_t total = 0;
  for (int b = 0; b < blocks; ++b) {
    const int block_in = b == 0 ? in : out;
    if (lay.bottleneck) {
      total += conv(block_in, inner, 1) + bn(inner);
      total += conv(inner, inner, 3) + bn(inner);
      total += conv(inner, out, 1) + bn(out);
    } else {
      total += conv(block_in, inner, 3) + bn(inner);
      total += conv(inner, out, 3) + bn(out);
    }
  }
  return total;
}

}  // namespace

int64_t count_params_through(const BackboneConfig& config, int through) {
  const auto lay = layout(config.family);
  const auto w = stage_widths(config);
  int64_t total = conv(3, w.stem, 7) + bn(w.stem);
  int in = w.stem;
  for (int s = 0; s < std::min(through, 4); ++s) {
    total += stage_params(lay, in, w.inner[s], w.output[s], lay.blocks[s]);
    const bool strided = s > 0;
    if (strided || in != w.output[s]) total += conv(in, w.output[s], 1) + bn(w.output[s]);
    in = w.output[s];
  }
  return total;
}

int64_t count_params(const BackboneConfig& config) { return count_params_through(config, 4); }

}  // namespace hybridvit::backbone
