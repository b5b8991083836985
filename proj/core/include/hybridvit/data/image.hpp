#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hybridvit::data {

/// Per-channel normalization constants applied to an image.
struct Normalization {
  std::array<float, 3> mean{};
  std::array<float, 3> std{};

  bool operator==(const Normalization&) const = default;
};

/// ImageNet statistics used by the normalizing augmentation recipes.
inline constexpr Normalization kImageNetNormalization{{0.485f, 0.456f, 0.406f},
                                                      {0.229f, 0.224f, 0.225f}};

/// Dense C x H x W image, planar (channel-major, then row-major) storage.
///
/// Values are in [0, 1] until a normalization is applied; once normalized
/// the constants are recorded in `normalization()`.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, float fill = 0.0f);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  float& at(int c, int row, int col) {
    return values_[(static_cast<std::size_t>(c) * height_ + row) * width_ + col];
  }
  float at(int c, int row, int col) const {
    return values_[(static_cast<std::size_t>(c) * height_ + row) * width_ + col];
  }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }
  std::span<float> plane(int c);
  std::span<const float> plane(int c) const;

  const std::optional<Normalization>& normalization() const noexcept { return normalization_; }
  void set_normalization(std::optional<Normalization> n) { normalization_ = n; }

  bool all_finite() const;
  bool same_shape(const ImageTensor& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  /// Free-form origin tag, e.g. "stl10:train_X.bin#17" or "synthetic:42#3".
  std::string provenance;

  bool operator==(const ImageTensor& other) const {
    return same_shape(other) && values_ == other.values_ && normalization_ == other.normalization_;
  }

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> values_;
  std::optional<Normalization> normalization_;
};

}  // namespace hybridvit::data
