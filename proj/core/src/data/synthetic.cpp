#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "hybridvit/data/dataset.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/rng.hpp"

namespace hybridvit::data {

namespace {

using std::numbers::pi;

// Membership of a point in shape-local coordinates (unit radius, unrotated).
bool inside(int family, double u, double v) {
  const double r = std::hypot(u, v);
  switch (family) {
    case 0:  // disk
      return r <= 1.0;
    case 1:  // square
      return std::max(std::abs(u), std::abs(v)) <= 0.78;
    case 2: {  // equilateral triangle, circumradius 1
      for (int k = 0; k < 3; ++k) {
        const double a = pi / 2 + 2 * pi * k / 3 + pi;  // outward edge normals
        if (u * std::cos(a) + v * std::sin(a) > 0.5) return false;
      }
      return true;
    }
    case 3:  // plus
      return (std::abs(u) <= 0.28 && std::abs(v) <= 1.0) ||
             (std::abs(v) <= 0.28 && std::abs(u) <= 1.0);
    case 4:  // ring
      return r <= 1.0 && r >= 0.6;
    case 5: {  // five-point star
      const double ang = std::atan2(v, u);
      const double phase = std::fmod(ang + 2 * pi, 2 * pi / 5) / (2 * pi / 5);
      const double edge = 0.45 + 0.55 * std::abs(1.0 - 2.0 * phase);
      return r <= edge;
    }
    case 6:  // crescent
      return r <= 1.0 && std::hypot(u - 0.45, v) > 0.8;
    case 7:  // two parallel bars
      return std::abs(u) <= 1.0 && std::abs(std::abs(v) - 0.5) <= 0.2;
    case 8:  // square frame
      return std::max(std::abs(u), std::abs(v)) <= 0.85 &&
             std::max(std::abs(u), std::abs(v)) >= 0.55;
    case 9:  // half disk
      return r <= 1.0 && v >= 0.0;
    default:
      return false;
  }
}

// Two-tone fill texture in pattern coordinates (pixels, rotated); 1 selects
// the second fill color. Each class pairs a silhouette with its own texture.
int fill_pattern(int family, double x, double y, double period) {
  auto frac = [](double v) { return v - std::floor(v); };
  const double fx = frac(x / period);
  const double fy = frac(y / period);
  switch (family) {
    case 0:  // plain
      return 0;
    case 1:  // stripes
      return fx < 0.5;
    case 2:  // checkerboard
      return (static_cast<long>(std::floor(x / period)) + static_cast<long>(std::floor(y / period))) & 1;
    case 3:  // dots
      return std::hypot(fx - 0.5, fy - 0.5) < 0.28;
    case 4:  // concentric bands
      return frac(std::hypot(x, y) / period) < 0.5;
    case 5:  // grid lines
      return fx < 0.22 || fy < 0.22;
    case 6:  // thin diagonals
      return frac((x + y) / period) < 0.25;
    case 7:  // waves
      return frac((x + 0.35 * period * std::sin(2 * pi * y / period)) / period) < 0.5;
    case 8:  // sparse blocks
      return fx < 0.5 && fy < 0.5;
    case 9:  // chevrons
      return frac(std::abs(x) / period + std::abs(fy - 0.5)) < 0.5;
    default:
      return 0;
  }
}

double luminance(const std::array<double, 3>& c) {
  return 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2];
}

std::array<double, 3> random_color(RngStream& rng) {
  return {rng.uniform(), rng.uniform(), rng.uniform()};
}

ImageTensor render(int family, int hw, RngStream& rng) {
  ImageTensor img(3, hw, hw);

  // background: linear gradient between two colors plus pixel noise
  const auto bg_a = random_color(rng);
  const auto bg_b = random_color(rng);
  const double grad_angle = rng.uniform(0.0, 2 * pi);
  const double gx = std::cos(grad_angle);
  const double gy = std::sin(grad_angle);

  // foreground: silhouette and texture vary by class, colors are class-agnostic
  const double cx = rng.uniform(0.3, 0.7) * hw;
  const double cy = rng.uniform(0.3, 0.7) * hw;
  const double radius = rng.uniform(0.30, 0.45) * hw;
  const double theta = rng.uniform(0.0, 2 * pi);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double bg_lum = 0.5 * (luminance(bg_a) + luminance(bg_b));
  auto fg = random_color(rng);
  for (int attempt = 0; attempt < 32 && std::abs(luminance(fg) - bg_lum) < 0.25; ++attempt) {
    fg = random_color(rng);
  }
  auto fg2 = random_color(rng);
  for (int attempt = 0; attempt < 32 && std::abs(luminance(fg2) - luminance(fg)) < 0.3; ++attempt) {
    fg2 = random_color(rng);
  }
  const double period = std::max(2.0, rng.uniform(5.0, 9.0) * hw / 96.0);
  const double pat_theta = rng.uniform(0.0, 2 * pi);
  const double pc = std::cos(pat_theta);
  const double ps = std::sin(pat_theta);

  // a few thin distractor strokes
  const int strokes = static_cast<int>(rng.uniform_int(0, 2));
  struct Stroke {
    double x0, y0, dx, dy, len;
    std::array<double, 3> color;
  };
  std::vector<Stroke> lines;
  for (int s = 0; s < strokes; ++s) {
    const double a = rng.uniform(0.0, 2 * pi);
    lines.push_back({rng.uniform(0.0, hw), rng.uniform(0.0, hw), std::cos(a), std::sin(a),
                     rng.uniform(0.2, 0.5) * hw, random_color(rng)});
  }

  constexpr std::array<double, 2> kSub{0.25, 0.75};
  for (int row = 0; row < hw; ++row) {
    for (int col = 0; col < hw; ++col) {
      const double t =
          std::clamp(0.5 + ((col - hw / 2.0) * gx + (row - hw / 2.0) * gy) / hw, 0.0, 1.0);
      std::array<double, 3> px{};
      for (int c = 0; c < 3; ++c) px[c] = (1 - t) * bg_a[c] + t * bg_b[c];

      for (const auto& ln : lines) {
        const double qx = col + 0.5 - ln.x0;
        const double qy = row + 0.5 - ln.y0;
        const double along = qx * ln.dx + qy * ln.dy;
        const double across = std::abs(-qx * ln.dy + qy * ln.dx);
        if (along >= 0 && along <= ln.len && across <= 0.75) px = ln.color;
      }

      int hits = 0;
      for (double sy : kSub) {
        for (double sx : kSub) {
          const double dx = (col + sx - cx) / radius;
          const double dy = (row + sy - cy) / radius;
          const double u = ct * dx + st * dy;
          const double v = -st * dx + ct * dy;
          hits += inside(family, u, v) ? 1 : 0;
        }
      }
      const double cover = hits / 4.0;
      const double ox = col + 0.5 - cx;
      const double oy = row + 0.5 - cy;
      const auto& fill = fill_pattern(family, pc * ox + ps * oy, -ps * ox + pc * oy, period) ? fg2 : fg;
      for (int c = 0; c < 3; ++c) {
        const double noise = rng.uniform(-0.04, 0.04);
        const double value = (1 - cover) * px[c] + cover * fill[c] + noise;
        img.at(c, row, col) = static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }
  return img;
}

const std::array<const char*, kSyntheticMaxClasses> kFamilyNames{
    "disk", "square", "triangle", "plus", "ring", "star", "crescent", "bars", "frame", "half_disk"};

}  // namespace

Dataset make_synthetic_dataset(int n, int n_classes, int hw, std::uint64_t seed, Split split) {
  if (n_classes < 2 || n_classes > kSyntheticMaxClasses) {
    throw ConfigError("synthetic dataset needs 2.." + std::to_string(kSyntheticMaxClasses) +
                      " classes");
  }
  if (n <= 0 || n % n_classes != 0) {
    throw ConfigError("synthetic dataset size must be a positive multiple of the class count");
  }
  if (hw < 8) throw ConfigError("synthetic images must be at least 8x8");

  Dataset out;
  out.split = split;
  for (int c = 0; c < n_classes; ++c) out.class_names.emplace_back(kFamilyNames[c]);
  out.images.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int label = i % n_classes;
    auto rng = RngStream::derive(seed, {static_cast<std::uint64_t>(i)});
    auto img = render(label, hw, rng);
    img.provenance = "synthetic:" + std::to_string(seed) + "#" + std::to_string(i);
    out.images.push_back(std::move(img));
    if (is_labeled(split)) out.labels.push_back(label);
  }
  return out;
}

}  // namespace hybridvit::data
