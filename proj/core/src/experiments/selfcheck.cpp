#include "hybridvit/experiments/selfcheck.hpp"

#include <cmath>
#include <sstream>

#include "hybridvit/byol/byol.hpp"
#include "hybridvit/byol/loss.hpp"
#include "hybridvit/byol/mlp_head.hpp"
#include "hybridvit/experiments/sweep.hpp"
#include "hybridvit/transformers/attention.hpp"
#include "hybridvit/transformers/encoder.hpp"
#include "hybridvit/transformers/tokenizers.hpp"

namespace hybridvit::experiments {

double max_gradient_error(const std::function<torch::Tensor()>& f, const std::vector<torch::Tensor>& inputs,
                          double step) {
  for (const auto& t : inputs) {
    if (t.grad().defined()) t.mutable_grad().zero_();
  }
  f().backward();
  double worst = 0.0;
  for (const auto& t : inputs) {
    auto analytic = t.grad().clone();
    auto flat = t.detach().view(-1);
    for (int64_t i = 0; i < flat.numel(); ++i) {
      const double orig = flat[i].item<double>();
      double plus, minus;
      {
        torch::NoGradGuard guard;
        flat[i] = orig + step;
        plus = f().item<double>();
        flat[i] = orig - step;
        minus = f().item<double>();
        flat[i] = orig;
      }
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic.view(-1)[i].item<double>();
      worst = std::max(worst, std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)}));
    }
  }
  return worst;
}

namespace {

CheckResult check(const std::string& name, bool ok, const std::string& detail) { return {name, ok, detail}; }

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::uint64_t seed) {
  std::vector<CheckResult> out;
  torch::manual_seed(seed);
  const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);

  {
    auto q = torch::randn({256, 16}, f64), z = torch::randn({256, 16}, f64);
    auto l = byol::regression_loss(q, z);
    const double lo = l.min().item<double>(), hi = l.max().item<double>();
    out.push_back(check("regression loss within [0, 4]", lo >= 0.0 && hi <= 4.0,
                        "min " + num(lo) + ", max " + num(hi)));
  }
  {
    auto a = torch::randn({5, 3}), b = torch::randn({5, 3});
    std::vector<torch::Tensor> on{a};
    std::vector<torch::Tensor> t1{b.clone()}, t0{b.clone()};
    byol::ema_update(on, t1, 1.0);
    byol::ema_update(on, t0, 0.0);
    std::vector<torch::Tensor> th{torch::zeros({1})};
    std::vector<torch::Tensor> oh{torch::full({1}, 2.0)};
    byol::ema_update(oh, th, 0.5);
    const bool ok = t1[0].equal(b) && t0[0].equal(a) && th[0].item<float>() == 1.0f;
    out.push_back(check("EMA with tau 0, 0.5, 1", ok, ok ? "exact" : "mismatch"));
  }
  {
    transformers::MultiHeadAttention mha(32, 4);
    auto [y, w] = mha->forward_with_weights(torch::randn({3, 7, 32}));
    const double dev = (w.sum(-1) - 1.0).abs().max().item<double>();
    out.push_back(check("attention rows sum to 1", dev <= 1e-6, "max deviation " + num(dev)));
  }
  {
    transformers::SeqPool pool(8);
    auto x = torch::randn({4, 6, 8});
    auto p = pool->forward(x);
    auto lo = std::get<0>(x.min(1)), hi = std::get<0>(x.max(1));
    const bool ok = (p >= lo - 1e-6).all().item<bool>() && (p <= hi + 1e-6).all().item<bool>();
    out.push_back(check("sequence pooling is a convex combination", ok, ok ? "inside hull" : "outside hull"));
  }
  {
    int bad = 0;
    const backbone::BackboneConfig cfg;
    for (const auto& [tap, p] : layer_patch_rows()) {
      const auto shape = backbone::feature_shape(cfg, tap, 96);
      auto x = torch::zeros({1, 1, shape.height, shape.width});
      const auto expect = ((shape.height + p - 1) / p) * ((shape.width + p - 1) / p);
      if (transformers::patchify(x, p).size(1) != expect) ++bad;
    }
    out.push_back(check("patch count law over the tap/patch grid", bad == 0, std::to_string(bad) + " mismatches"));
  }
  {
    byol::MlpHead head(byol::MlpHeadConfig{6, 10, 4, 0.01});
    head->to(torch::kFloat64);
    auto x = torch::randn({5, 6}, f64);
    auto target = torch::randn({5, 4}, f64);
    const double err = max_gradient_error(
        [&] { return byol::regression_loss(head->forward(x), target).sum(); }, head->parameters());
    out.push_back(check("MLP head gradient vs finite differences", err <= 1e-3, "max rel error " + num(err)));
  }
  {
    transformers::EncoderBlock block(8, 2, 2.0);
    block->to(torch::kFloat64);
    auto x = torch::randn({2, 3, 8}, f64);
    auto w = torch::randn({2, 3, 8}, f64);
    const double err = max_gradient_error([&] { return (block->forward(x) * w).sum(); }, block->parameters());
    out.push_back(check("encoder block gradient vs finite differences", err <= 1e-3, "max rel error " + num(err)));
  }
  {
    auto q = torch::randn({4, 5}, f64).requires_grad_(true);
    auto z = torch::randn({4, 5}, f64);
    const double err = max_gradient_error([&] { return byol::regression_loss(q, z).sum(); }, {q});
    out.push_back(check("regression loss gradient vs finite differences", err <= 1e-3, "max rel error " + num(err)));
  }
  return out;
}

}  // namespace hybridvit::experiments
