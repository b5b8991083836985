#include "hybridvit/data/image.hpp"

#include <algorithm>
#include <cmath>

#include "hybridvit/errors.hpp"

namespace hybridvit::data {

ImageTensor::ImageTensor(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
  if (channels <= 0 || height <= 0 || width <= 0) {
    throw ShapeError("ImageTensor: dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

std::span<float> ImageTensor::plane(int c) {
  const auto n = static_cast<std::size_t>(height_) * width_;
  return std::span<float>(values_).subspan(static_cast<std::size_t>(c) * n, n);
}

std::span<const float> ImageTensor::plane(int c) const {
  const auto n = static_cast<std::size_t>(height_) * width_;
  return std::span<const float>(values_).subspan(static_cast<std::size_t>(c) * n, n);
}

bool ImageTensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace hybridvit::data
