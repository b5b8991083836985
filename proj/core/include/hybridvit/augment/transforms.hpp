#pragma once

#include <string_view>
#include <variant>

#include "hybridvit/data/image.hpp"
#include "hybridvit/rng.hpp"

namespace hybridvit::augment {

using data::ImageTensor;

// ---- descriptors ---------------------------------------------------------

struct ResizedCrop {
  int size = 96;
  double scale_lo = 0.08;
  double scale_hi = 1.0;
  double ratio_lo = 3.0 / 4.0;
  double ratio_hi = 4.0 / 3.0;
};
struct ColorJitter {
  double brightness = 0.4;
  double contrast = 0.4;
  double saturation = 0.4;
  double hue = 0.1;
};
struct HorizontalFlip {};
struct Grayscale {};
struct GaussianBlur {
  double sigma_lo = 0.1;
  double sigma_hi = 2.0;
};
struct Solarize {
  double threshold = 0.5;
};
struct Cutout {
  int holes = 1;
  int length = 8;
};
struct Rotation {
  double degrees = 15.0;
};
struct Normalize {
  data::Normalization constants = data::kImageNetNormalization;
};
struct CenterCrop {
  int size = 96;
};
struct Resize {
  int height = 96;
  int width = 96;
};
struct PaddedCrop {
  int size = 96;
  int padding = 4;
};

using TransformOp = std::variant<ResizedCrop, ColorJitter, HorizontalFlip, Grayscale,
                                 GaussianBlur, Solarize, Cutout, Rotation, Normalize, CenterCrop,
                                 Resize, PaddedCrop>;

enum class TransformKind {
  resized_crop,
  color_jitter,
  hflip,
  grayscale,
  gaussian_blur,
  solarize,
  cutout,
  rotation,
  normalize,
  center_crop,
  resize,
  padded_crop,
};

std::string_view to_string(TransformKind kind);
TransformKind parse_transform_kind(std::string_view name);

/// One stochastic step of a pipeline: fires with `probability`.
struct TransformDescriptor {
  TransformOp op;
  double probability = 1.0;

  TransformKind kind() const;
  /// Throws ConfigError when the probability or a parameter is out of range.
  void validate() const;
};

// ---- deterministic primitives -------------------------------------------

/// p -> (p >= threshold) ? 1 - p : p, pointwise.
ImageTensor solarize(const ImageTensor& image, double threshold);
/// ITU-R 601 luma replicated to every channel.
ImageTensor grayscale(const ImageTensor& image);
ImageTensor hflip(const ImageTensor& image);
/// Bilinear resampling with half-pixel centers.
ImageTensor resize_bilinear(const ImageTensor& image, int height, int width);
/// Crops [top, top+height) x [left, left+width); regions outside the image read as 0.
ImageTensor crop(const ImageTensor& image, int top, int left, int height, int width);
/// Rotates counter-clockwise about the center, bilinear, zero fill.
ImageTensor rotate(const ImageTensor& image, double degrees);
/// Separable Gaussian blur with reflect padding.
ImageTensor gaussian_blur(const ImageTensor& image, int kernel_size, double sigma);
/// Odd kernel size for blurring an image of the given extent (10% of the short side).
int blur_kernel_size(int height, int width);
ImageTensor adjust_brightness(const ImageTensor& image, double factor);
ImageTensor adjust_contrast(const ImageTensor& image, double factor);
ImageTensor adjust_saturation(const ImageTensor& image, double factor);
/// Rotates hue by `shift` turns (in [-0.5, 0.5]).
ImageTensor adjust_hue(const ImageTensor& image, double shift);
/// Zeros a length x length square centered at (row, col), clipped to the image.
ImageTensor cutout(const ImageTensor& image, int row, int col, int length);
ImageTensor normalize(const ImageTensor& image, const data::Normalization& n);

/// Applies a descriptor's operation with parameters drawn from `rng`
/// (ignores the probability; the pipeline decides whether it fires).
ImageTensor apply_op(const TransformOp& op, const ImageTensor& image, RngStream& rng);

}  // namespace hybridvit::augment
