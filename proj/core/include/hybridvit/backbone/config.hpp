#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace hybridvit::backbone {

enum class Family { r18, r50, wide50, wide101 };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);

/// Stage boundary where features are tapped or frozen.
enum class TapPoint { layer1 = 1, layer2 = 2, layer3 = 3, layer4 = 4 };

std::string_view to_string(TapPoint t);
TapPoint parse_tap(std::string_view name);
inline int stage_index(TapPoint t) { return static_cast<int>(t); }

/// Channel counts are rounded to a multiple of this many channels.
inline constexpr int kChannelDivisor = 8;

struct BackboneConfig {
  Family family = Family::r50;
  /// Scales every channel width; the desk profile uses 1/8.
  double width_multiplier = 0.125;
  /// Zero-initializes the last BN scale of every residual branch.
  bool zero_init_residual = true;

  bool operator==(const BackboneConfig&) const = default;
};

/// Per-family structural table before width scaling.
struct FamilyLayout {
  bool bottleneck;
  std::array<int, 4> blocks;
  /// 1 for standard families, 2 for the widened ones (inner 3x3 width only).
  int inner_width_factor;
};

FamilyLayout layout(Family family);

/// round(c * multiplier) to the nearest multiple of kChannelDivisor, at least one multiple.
int scaled_channels(int channels, double multiplier);

/// Resolved channel widths of one configuration.
struct StageWidths {
  int stem;
  std::array<int, 4> inner;   // 3x3 conv width inside each stage
  std::array<int, 4> output;  // stage output channels
};
StageWidths stage_widths(const BackboneConfig& config);

struct FeatureShape {
  int64_t channels;
  int64_t height;
  int64_t width;

  bool operator==(const FeatureShape&) const = default;
};

/// Overall stride from the input to the end of a stage: 4, 8, 16, 32.
int tap_stride(TapPoint tap);

/// Output shape at `tap` for a square input of side `input_hw`; each stride-2
/// step rounds up. Throws ShapeError when input_hw < tap_stride(tap).
FeatureShape feature_shape(const BackboneConfig& config, TapPoint tap, int input_hw);

/// Exact count of trainable scalars (conv weights plus BN affine parameters)
/// in the feature extractor, computed from the structural tables.
int64_t count_params(const BackboneConfig& config);

/// Parameter count of the stem plus stages 1..`through` (0 = stem only).
int64_t count_params_through(const BackboneConfig& config, int through);

}  // namespace hybridvit::backbone
