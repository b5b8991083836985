#include "hybridvit/augment/transforms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "hybridvit/errors.hpp"

namespace hybridvit::augment {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

void require_rgb(const ImageTensor& image, const char* op) {
  if (image.channels() != 3) throw ShapeError(std::string(op) + " needs a 3-channel image");
}

// Bilinear sample at continuous (y, x) in pixel-center coordinates; taps
// outside the image contribute 0.
float sample_zero(const ImageTensor& img, int c, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0;
  const double fx = x - x0;
  auto tap = [&](int yy, int xx) -> double {
    if (yy < 0 || xx < 0 || yy >= img.height() || xx >= img.width()) return 0.0;
    return img.at(c, yy, xx);
  };
  const double v = (1 - fy) * ((1 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1)) +
                   fy * ((1 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1));
  return static_cast<float>(v);
}

float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

struct CropBox {
  int top, left, height, width;
};

CropBox resized_crop_box(const ImageTensor& img, const ResizedCrop& rc, RngStream& rng) {
  const int H = img.height();
  const int W = img.width();
  const double area = static_cast<double>(H) * W;
  const double log_lo = std::log(rc.ratio_lo);
  const double log_hi = std::log(rc.ratio_hi);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(rc.scale_lo, rc.scale_hi);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w > 0 && h > 0 && w <= W && h <= H) {
      const int top = static_cast<int>(rng.uniform_int(0, H - h));
      const int left = static_cast<int>(rng.uniform_int(0, W - w));
      return {top, left, h, w};
    }
  }
  // fallback: whole image clipped to the ratio range
  const double in_ratio = static_cast<double>(W) / H;
  int w = W;
  int h = H;
  if (in_ratio < rc.ratio_lo) {
    h = static_cast<int>(std::lround(w / rc.ratio_lo));
  } else if (in_ratio > rc.ratio_hi) {
    w = static_cast<int>(std::lround(h * rc.ratio_hi));
  }
  return {(H - h) / 2, (W - w) / 2, h, w};
}

void rgb_to_hsv(float r, float g, float b, float& h, float& s, float& v) {
  const float mx = std::max({r, g, b});
  const float mn = std::min({r, g, b});
  const float d = mx - mn;
  v = mx;
  s = mx > 0.0f ? d / mx : 0.0f;
  if (d <= 0.0f) {
    h = 0.0f;
    return;
  }
  float hh;
  if (mx == r) {
    hh = (g - b) / d;
  } else if (mx == g) {
    hh = 2.0f + (b - r) / d;
  } else {
    hh = 4.0f + (r - g) / d;
  }
  hh /= 6.0f;
  if (hh < 0.0f) hh += 1.0f;
  h = hh;
}

void hsv_to_rgb(float h, float s, float v, float& r, float& g, float& b) {
  const float h6 = h * 6.0f;
  const int i = static_cast<int>(std::floor(h6)) % 6;
  const float f = h6 - std::floor(h6);
  const float p = v * (1.0f - s);
  const float q = v * (1.0f - s * f);
  const float t = v * (1.0f - s * (1.0f - f));
  switch (i) {
    case 0: r = v, g = t, b = p; break;
    case 1: r = q, g = v, b = p; break;
    case 2: r = p, g = v, b = t; break;
    case 3: r = p, g = q, b = v; break;
    case 4: r = t, g = p, b = v; break;
    default: r = v, g = p, b = q; break;
  }
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::resized_crop: return "resized_crop";
    case TransformKind::color_jitter: return "color_jitter";
    case TransformKind::hflip: return "hflip";
    case TransformKind::grayscale: return "grayscale";
    case TransformKind::gaussian_blur: return "gaussian_blur";
    case TransformKind::solarize: return "solarize";
    case TransformKind::cutout: return "cutout";
    case TransformKind::rotation: return "rotation";
    case TransformKind::normalize: return "normalize";
    case TransformKind::center_crop: return "center_crop";
    case TransformKind::resize: return "resize";
    case TransformKind::padded_crop: return "padded_crop";
  }
  return "?";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (int k = 0; k <= static_cast<int>(TransformKind::padded_crop); ++k) {
    const auto kind = static_cast<TransformKind>(k);
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown transform kind '" + std::string(name) + "'");
}

TransformKind TransformDescriptor::kind() const {
  return std::visit(
      Overloaded{
          [](const ResizedCrop&) { return TransformKind::resized_crop; },
          [](const ColorJitter&) { return TransformKind::color_jitter; },
          [](const HorizontalFlip&) { return TransformKind::hflip; },
          [](const Grayscale&) { return TransformKind::grayscale; },
          [](const GaussianBlur&) { return TransformKind::gaussian_blur; },
          [](const Solarize&) { return TransformKind::solarize; },
          [](const Cutout&) { return TransformKind::cutout; },
          [](const Rotation&) { return TransformKind::rotation; },
          [](const Normalize&) { return TransformKind::normalize; },
          [](const CenterCrop&) { return TransformKind::center_crop; },
          [](const Resize&) { return TransformKind::resize; },
          [](const PaddedCrop&) { return TransformKind::padded_crop; },
      },
      op);
}

void TransformDescriptor::validate() const {
  auto fail = [this](const std::string& why) {
    throw ConfigError(std::string(to_string(kind())) + ": " + why);
  };
  if (!(probability >= 0.0 && probability <= 1.0)) fail("probability must be in [0, 1]");
  std::visit(
      Overloaded{
          [&](const ResizedCrop& v) {
            if (v.size < 1) fail("size must be positive");
            if (!(v.scale_lo > 0 && v.scale_lo <= v.scale_hi && v.scale_hi <= 1.0))
              fail("scale range must satisfy 0 < lo <= hi <= 1");
            if (!(v.ratio_lo > 0 && v.ratio_lo <= v.ratio_hi)) fail("bad ratio range");
          },
          [&](const ColorJitter& v) {
            if (v.brightness < 0 || v.contrast < 0 || v.saturation < 0)
              fail("jitter strengths must be non-negative");
            if (v.hue < 0 || v.hue > 0.5) fail("hue must be in [0, 0.5]");
          },
          [&](const GaussianBlur& v) {
            if (!(v.sigma_lo > 0 && v.sigma_lo <= v.sigma_hi)) fail("bad sigma range");
          },
          [&](const Solarize& v) {
            if (v.threshold < 0 || v.threshold > 1) fail("threshold must be in [0, 1]");
          },
          [&](const Cutout& v) {
            if (v.holes < 0 || v.length < 1) fail("holes >= 0 and length >= 1 required");
          },
          [&](const Rotation& v) {
            if (v.degrees < 0 || v.degrees > 180) fail("degrees must be in [0, 180]");
          },
          [&](const Normalize& v) {
            for (float s : v.constants.std)
              if (!(s > 0)) fail("std must be positive");
          },
          [&](const CenterCrop& v) {
            if (v.size < 1) fail("size must be positive");
          },
          [&](const Resize& v) {
            if (v.height < 1 || v.width < 1) fail("size must be positive");
          },
          [&](const PaddedCrop& v) {
            if (v.size < 1 || v.padding < 0) fail("size > 0 and padding >= 0 required");
          },
          [](const auto&) {},
      },
      op);
}

ImageTensor solarize(const ImageTensor& image, double threshold) {
  ImageTensor out = image;
  for (float& v : out.values()) {
    if (v >= threshold) v = 1.0f - v;
  }
  return out;
}

ImageTensor grayscale(const ImageTensor& image) {
  require_rgb(image, "grayscale");
  ImageTensor out = image;
  const auto r = image.plane(0);
  const auto g = image.plane(1);
  const auto b = image.plane(2);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const float l = luma(r[i], g[i], b[i]);
    for (int c = 0; c < 3; ++c) out.plane(c)[i] = l;
  }
  return out;
}

ImageTensor hflip(const ImageTensor& image) {
  ImageTensor out = image;
  const int W = image.width();
  for (int c = 0; c < image.channels(); ++c)
    for (int r = 0; r < image.height(); ++r)
      for (int x = 0; x < W; ++x) out.at(c, r, x) = image.at(c, r, W - 1 - x);
  return out;
}

ImageTensor resize_bilinear(const ImageTensor& image, int height, int width) {
  if (height < 1 || width < 1) throw ShapeError("resize: target must be positive");
  if (height == image.height() && width == image.width()) return image;
  ImageTensor out(image.channels(), height, width);
  out.set_normalization(image.normalization());
  out.provenance = image.provenance;
  const double sy = static_cast<double>(image.height()) / height;
  const double sx = static_cast<double>(image.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double fy = y - y0;
    for (int x = 0; x < width; ++x) {
      const double xs = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(xs);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double fx = xs - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double v = (1 - fy) * ((1 - fx) * image.at(c, y0, x0) + fx * image.at(c, y0, x1)) +
                         fy * ((1 - fx) * image.at(c, y1, x0) + fx * image.at(c, y1, x1));
        out.at(c, r, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

ImageTensor crop(const ImageTensor& image, int top, int left, int height, int width) {
  ImageTensor out(image.channels(), height, width);
  out.set_normalization(image.normalization());
  out.provenance = image.provenance;
  for (int c = 0; c < image.channels(); ++c) {
    for (int r = 0; r < height; ++r) {
      const int sr = top + r;
      if (sr < 0 || sr >= image.height()) continue;
      for (int x = 0; x < width; ++x) {
        const int sx = left + x;
        if (sx < 0 || sx >= image.width()) continue;
        out.at(c, r, x) = image.at(c, sr, sx);
      }
    }
  }
  return out;
}

ImageTensor rotate(const ImageTensor& image, double degrees) {
  const double a = degrees * std::numbers::pi / 180.0;
  const double ca = std::cos(a);
  const double sa = std::sin(a);
  const double cy = (image.height() - 1) / 2.0;
  const double cx = (image.width() - 1) / 2.0;
  ImageTensor out(image.channels(), image.height(), image.width());
  out.set_normalization(image.normalization());
  out.provenance = image.provenance;
  for (int r = 0; r < image.height(); ++r) {
    for (int x = 0; x < image.width(); ++x) {
      const double dx = x - cx;
      const double dy = r - cy;
      // inverse map of a counter-clockwise rotation (y axis points down)
      const double srcx = cx + ca * dx - sa * dy;
      const double srcy = cy + sa * dx + ca * dy;
      for (int c = 0; c < image.channels(); ++c) out.at(c, r, x) = sample_zero(image, c, srcy, srcx);
    }
  }
  return out;
}

int blur_kernel_size(int height, int width) {
  int k = static_cast<int>(std::floor(0.1 * std::min(height, width)));
  if (k % 2 == 0) k += 1;
  return std::max(k, 1);
}

ImageTensor gaussian_blur(const ImageTensor& image, int kernel_size, double sigma) {
  if (kernel_size < 1 || kernel_size % 2 == 0) throw ConfigError("blur kernel must be odd");
  if (!(sigma > 0)) throw ConfigError("blur sigma must be positive");
  const int half = kernel_size / 2;
  std::vector<double> w(static_cast<std::size_t>(kernel_size));
  double total = 0.0;
  for (int i = -half; i <= half; ++i) {
    w[i + half] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += w[i + half];
  }
  for (double& v : w) v /= total;

  const int H = image.height();
  const int W = image.width();
  ImageTensor tmp = image;
  ImageTensor out = image;
  for (int c = 0; c < image.channels(); ++c) {
    for (int r = 0; r < H; ++r) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) acc += w[k + half] * image.at(c, r, reflect(x + k, W));
        tmp.at(c, r, x) = static_cast<float>(acc);
      }
    }
    for (int r = 0; r < H; ++r) {
      for (int x = 0; x < W; ++x) {
        double acc = 0.0;
        for (int k = -half; k <= half; ++k) acc += w[k + half] * tmp.at(c, reflect(r + k, H), x);
        out.at(c, r, x) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

ImageTensor adjust_brightness(const ImageTensor& image, double factor) {
  ImageTensor out = image;
  for (float& v : out.values()) v = clamp01(v * factor);
  return out;
}

ImageTensor adjust_contrast(const ImageTensor& image, double factor) {
  require_rgb(image, "contrast");
  double mean = 0.0;
  const auto r = image.plane(0);
  const auto g = image.plane(1);
  const auto b = image.plane(2);
  for (std::size_t i = 0; i < r.size(); ++i) mean += luma(r[i], g[i], b[i]);
  mean /= static_cast<double>(r.size());
  ImageTensor out = image;
  for (float& v : out.values()) v = clamp01(factor * v + (1.0 - factor) * mean);
  return out;
}

ImageTensor adjust_saturation(const ImageTensor& image, double factor) {
  require_rgb(image, "saturation");
  ImageTensor out = image;
  const auto r = image.plane(0);
  const auto g = image.plane(1);
  const auto b = image.plane(2);
  for (std::size_t i = 0; i < r.size(); ++i) {
    const float l = luma(r[i], g[i], b[i]);
    for (int c = 0; c < 3; ++c) {
      out.plane(c)[i] = clamp01(factor * image.plane(c)[i] + (1.0 - factor) * l);
    }
  }
  return out;
}

ImageTensor adjust_hue(const ImageTensor& image, double shift) {
  require_rgb(image, "hue");
  ImageTensor out = image;
  auto r = out.plane(0);
  auto g = out.plane(1);
  auto b = out.plane(2);
  for (std::size_t i = 0; i < r.size(); ++i) {
    float h, s, v;
    rgb_to_hsv(r[i], g[i], b[i], h, s, v);
    h = static_cast<float>(std::fmod(h + shift + 1.0, 1.0));
    float nr, ng, nb;
    hsv_to_rgb(h, s, v, nr, ng, nb);
    r[i] = std::clamp(nr, 0.0f, 1.0f);
    g[i] = std::clamp(ng, 0.0f, 1.0f);
    b[i] = std::clamp(nb, 0.0f, 1.0f);
  }
  return out;
}

ImageTensor cutout(const ImageTensor& image, int row, int col, int length) {
  ImageTensor out = image;
  const int r0 = std::max(0, row - length / 2);
  const int r1 = std::min(image.height(), row - length / 2 + length);
  const int c0 = std::max(0, col - length / 2);
  const int c1 = std::min(image.width(), col - length / 2 + length);
  for (int c = 0; c < image.channels(); ++c)
    for (int r = r0; r < r1; ++r)
      for (int x = c0; x < c1; ++x) out.at(c, r, x) = 0.0f;
  return out;
}

ImageTensor normalize(const ImageTensor& image, const data::Normalization& n) {
  require_rgb(image, "normalize");
  if (image.normalization()) throw Error("normalize: image is already normalized");
  ImageTensor out = image;
  for (int c = 0; c < 3; ++c) {
    for (float& v : out.plane(c)) v = (v - n.mean[c]) / n.std[c];
  }
  out.set_normalization(n);
  return out;
}

ImageTensor apply_op(const TransformOp& op, const ImageTensor& image, RngStream& rng) {
  return std::visit(
      Overloaded{
          [&](const ResizedCrop& v) {
            const auto box = resized_crop_box(image, v, rng);
            return resize_bilinear(crop(image, box.top, box.left, box.height, box.width), v.size,
                                   v.size);
          },
          [&](const ColorJitter& v) {
            std::array<int, 4> order{0, 1, 2, 3};
            for (int i = 3; i > 0; --i) {
              std::swap(order[i], order[static_cast<int>(rng.uniform_int(0, i))]);
            }
            const double fb = rng.uniform(std::max(0.0, 1.0 - v.brightness), 1.0 + v.brightness);
            const double fc = rng.uniform(std::max(0.0, 1.0 - v.contrast), 1.0 + v.contrast);
            const double fs = rng.uniform(std::max(0.0, 1.0 - v.saturation), 1.0 + v.saturation);
            const double fh = rng.uniform(-v.hue, v.hue);
            ImageTensor out = image;
            for (int step : order) {
              switch (step) {
                case 0:
                  if (v.brightness > 0) out = adjust_brightness(out, fb);
                  break;
                case 1:
                  if (v.contrast > 0) out = adjust_contrast(out, fc);
                  break;
                case 2:
                  if (v.saturation > 0) out = adjust_saturation(out, fs);
                  break;
                default:
                  if (v.hue > 0) out = adjust_hue(out, fh);
                  break;
              }
            }
            return out;
          },
          [&](const HorizontalFlip&) { return hflip(image); },
          [&](const Grayscale&) { return grayscale(image); },
          [&](const GaussianBlur& v) {
            const double sigma = rng.uniform(v.sigma_lo, v.sigma_hi);
            return gaussian_blur(image, blur_kernel_size(image.height(), image.width()), sigma);
          },
          [&](const Solarize& v) { return solarize(image, v.threshold); },
          [&](const Cutout& v) {
            ImageTensor out = image;
            for (int h = 0; h < v.holes; ++h) {
              const int row = static_cast<int>(rng.uniform_int(0, image.height() - 1));
              const int col = static_cast<int>(rng.uniform_int(0, image.width() - 1));
              out = cutout(out, row, col, v.length);
            }
            return out;
          },
          [&](const Rotation& v) { return rotate(image, rng.uniform(-v.degrees, v.degrees)); },
          [&](const Normalize& v) { return normalize(image, v.constants); },
          [&](const CenterCrop& v) {
            const int top = static_cast<int>(std::lround((image.height() - v.size) / 2.0));
            const int left = static_cast<int>(std::lround((image.width() - v.size) / 2.0));
            return crop(image, top, left, v.size, v.size);
          },
          [&](const Resize& v) { return resize_bilinear(image, v.height, v.width); },
          [&](const PaddedCrop& v) {
            const int span_h = image.height() + 2 * v.padding - v.size;
            const int span_w = image.width() + 2 * v.padding - v.size;
            if (span_h < 0 || span_w < 0) throw ShapeError("padded_crop larger than padded image");
            const int top = static_cast<int>(rng.uniform_int(0, span_h)) - v.padding;
            const int left = static_cast<int>(rng.uniform_int(0, span_w)) - v.padding;
            return crop(image, top, left, v.size, v.size);
          },
      },
      op);
}

}  // namespace hybridvit::augment
