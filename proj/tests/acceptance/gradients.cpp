#include <iostream>

#include "acceptance.hpp"
#include "hybridvit/byol/loss.hpp"
#include "hybridvit/byol/mlp_head.hpp"
#include "hybridvit/transformers/encoder.hpp"

#include "oracles.hpp"

namespace acceptance {

using namespace hybridvit;

namespace {

// Central-difference step near cbrt(machine epsilon): balances truncation
// error against rounding in the two function evaluations.
constexpr double kStep = 1e-5;

// Worst relative error between autograd and central differences over the
// input and every parameter of `module`, for the scalar <forward(x), probe>.
double module_error(torch::nn::Module& module, const std::function<torch::Tensor(const torch::Tensor&)>& forward,
                    torch::Tensor x) {
  x.set_requires_grad(true);
  const auto probe = torch::randn_like(forward(x).detach());
  for (auto& p : module.parameters()) p.mutable_grad() = torch::Tensor();
  (forward(x) * probe).sum().backward();

  auto scalar = [&] {
    torch::NoGradGuard ng;
    return (forward(x) * probe).sum().item<double>();
  };
  double worst = oracle::relative_error(x.grad(), oracle::numeric_gradient(scalar, x, kStep));
  for (auto& p : module.parameters()) {
    worst = std::max(worst, oracle::relative_error(p.grad(), oracle::numeric_gradient(scalar, p, kStep)));
  }
  return worst;
}

}  // namespace

Outcome gradients(const Context&) {
  Stopwatch sw;
  torch::manual_seed(21);
  std::vector<std::pair<std::string, double>> errors;

  for (double slope : {0.01, 0.2}) {
    byol::MlpHead head(byol::MlpHeadConfig{6, 10, 4, slope});
    head->to(torch::kFloat64);
    head->train();
    const auto err = module_error(
        *head, [&](const torch::Tensor& x) { return head->forward(x); },
        torch::randn({8, 6}, torch::kFloat64));
    errors.emplace_back("MLP head (slope " + fmt(slope, 2) + ")", err);
  }

  {
    transformers::EncoderBlock block(8, 2, 2.0);
    block->to(torch::kFloat64);
    const auto err = module_error(
        *block, [&](const torch::Tensor& x) { return block->forward(x); },
        torch::randn({2, 5, 8}, torch::kFloat64));
    errors.emplace_back("encoder block", err);
  }

  {
    auto q = torch::randn({6, 5}, torch::kFloat64).set_requires_grad(true);
    auto z = torch::randn({6, 5}, torch::kFloat64).set_requires_grad(true);
    byol::regression_loss(q, z).sum().backward();
    auto scalar = [&] {
      torch::NoGradGuard ng;
      return byol::regression_loss(q, z).sum().item<double>();
    };
    double err = oracle::relative_error(q.grad(), oracle::numeric_gradient(scalar, q, kStep));
    // The target side is a constant to the loss.
    if (z.grad().defined() && z.grad().abs().max().item<double>() != 0.0) err = 1.0;
    errors.emplace_back("regression loss", err);
  }

  double worst = 0.0;
  for (const auto& [name, err] : errors) {
    std::cout << "  " << name << ": max relative error " << fmt(err, 9) << std::endl;
    worst = std::max(worst, err);
  }
  const double secs = sw.seconds();
  Outcome out;
  out.passed = worst <= 1e-3 && secs <= 120.0;
  out.summary = "worst relative error " + fmt(worst, 9) + " (limit 1e-3), " + fmt(secs, 0) + " s (limit 120)";
  return out;
}

}  // namespace acceptance
