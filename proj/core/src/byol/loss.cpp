#include "hybridvit/byol/loss.hpp"

#include <cmath>

#include "hybridvit/errors.hpp"

namespace hybridvit::byol {

torch::Tensor regression_loss(const torch::Tensor& q, const torch::Tensor& z) {
  if (q.dim() != 2 || !q.sizes().equals(z.sizes())) {
    throw ShapeError("regression_loss expects two [N, D] tensors of equal shape");
  }
  auto zd = z.detach();
  auto qn = q / (q.pow(2).sum(1, true) + kNormEps).sqrt();
  auto zn = zd / (zd.pow(2).sum(1, true) + kNormEps).sqrt();
  return 2.0 - 2.0 * (qn * zn).sum(1);
}

double regression_loss(std::span<const double> q, std::span<const double> z) {
  if (q.size() != z.size()) throw ShapeError("regression_loss: length mismatch");
  double dot = 0.0, qq = 0.0, zz = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    dot += q[i] * z[i];
    qq += q[i] * q[i];
    zz += z[i] * z[i];
  }
  return 2.0 - 2.0 * dot / (std::sqrt(qq + kNormEps) * std::sqrt(zz + kNormEps));
}

}  // namespace hybridvit::byol
