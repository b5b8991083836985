#pragma once

// Reference computations used by the tests. They deliberately avoid the
// library's own helpers so a shared bug cannot make both sides agree.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <torch/torch.h>

namespace oracle {

/// Central differences of a scalar function of one tensor, element by element.
inline torch::Tensor numeric_gradient(const std::function<double()>& f, torch::Tensor t, double h = 1e-6) {
  auto g = torch::zeros_like(t);
  auto data = t.detach();
  auto flat = data.view(-1);
  auto gflat = g.view(-1);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i] = orig + h;
    const double up = f();
    flat[i] = orig - h;
    const double down = f();
    flat[i] = orig;
    gflat[i] = (up - down) / (2 * h);
  }
  return g;
}

/// max |a - n| / max(1e-8, |a| + |n|) with a floor on tiny magnitudes.
inline double relative_error(const torch::Tensor& analytic, const torch::Tensor& numeric) {
  auto a = analytic.to(torch::kFloat64).view(-1);
  auto n = numeric.to(torch::kFloat64).view(-1);
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double x = a[i].item<double>(), y = n[i].item<double>();
    const double denom = std::max(1e-6, std::abs(x) + std::abs(y));
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

inline std::vector<double> softmax(const std::vector<double>& v) {
  double m = v[0];
  for (double x : v) m = std::max(m, x);
  std::vector<double> out;
  double s = 0.0;
  for (double x : v) {
    out.push_back(std::exp(x - m));
    s += out.back();
  }
  for (double& x : out) x /= s;
  return out;
}

inline double cosine_loss(const std::vector<double>& q, const std::vector<double>& z) {
  double dot = 0, qq = 0, zz = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    dot += q[i] * z[i];
    qq += q[i] * q[i];
    zz += z[i] * z[i];
  }
  return 2.0 - 2.0 * dot / std::sqrt(qq * zz);
}

/// ceil(h/p) * ceil(w/p) by counting patch origins.
inline int64_t count_patches(int64_t h, int64_t w, int64_t p) {
  int64_t rows = 0, cols = 0;
  for (int64_t r = 0; r < h; r += p) ++rows;
  for (int64_t c = 0; c < w; c += p) ++cols;
  return rows * cols;
}

/// Output side of conv(k, stride s, pad k/2) then pool(pk, ps, pad pk/2).
inline int64_t conv_pool_side(int64_t n, int k, int s, int pk, int ps) {
  const int64_t conv = (n + 2 * (k / 2) - k) / s + 1;
  return (conv + 2 * (pk / 2) - pk) / ps + 1;
}

/// Binomial 3-sigma interval for the number of successes out of n.
inline std::pair<double, double> binomial_3sigma(int n, double p) {
  const double mu = n * p, sd = std::sqrt(n * p * (1 - p));
  return {mu - 3 * sd, mu + 3 * sd};
}

}  // namespace oracle
