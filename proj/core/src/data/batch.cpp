#include "hybridvit/data/batch.hpp"

#include <algorithm>

#include "hybridvit/errors.hpp"

namespace hybridvit::data {

torch::Tensor stack_images(std::span<const ImageTensor> images) {
  if (images.empty()) throw ShapeError("stack_images: empty batch");
  const auto& first = images.front();
  auto out = torch::empty({static_cast<long>(images.size()), first.channels(), first.height(),
                           first.width()},
                          torch::kFloat32);
  float* dst = out.data_ptr<float>();
  for (const auto& img : images) {
    if (!img.same_shape(first)) throw ShapeError("stack_images: images differ in shape");
    dst = std::copy(img.values().begin(), img.values().end(), dst);
  }
  return out;
}

ImageTensor image_from_tensor(const torch::Tensor& chw) {
  if (chw.dim() != 3) throw ShapeError("image_from_tensor expects [C, H, W]");
  auto t = chw.to(torch::kFloat32).contiguous();
  ImageTensor img(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)),
                  static_cast<int>(t.size(2)));
  std::copy_n(t.data_ptr<float>(), img.size(), img.values().begin());
  return img;
}

torch::Tensor normalize_batch(const torch::Tensor& x, const Normalization& n) {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("normalize_batch expects [N, 3, H, W]");
  auto opts = torch::TensorOptions().dtype(x.scalar_type());
  auto mean = torch::tensor({n.mean[0], n.mean[1], n.mean[2]}).to(opts).view({1, 3, 1, 1});
  auto std = torch::tensor({n.std[0], n.std[1], n.std[2]}).to(opts).view({1, 3, 1, 1});
  return (x - mean) / std;
}

}  // namespace hybridvit::data
