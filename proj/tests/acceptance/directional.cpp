#include <iostream>
#include <map>

#include "acceptance.hpp"
#include "hybridvit/train/models.hpp"
#include "hybridvit/transformers/classifier.hpp"

namespace acceptance {

using namespace hybridvit;
using backbone::TapPoint;

namespace {

constexpr double kAlpha = 0.01;

double frozen_convnet_top1(const byol::ByolState& state, std::uint64_t seed) {
  auto model = train::convnet_from_byol(state, TapPoint::layer2, kClasses, seed);
  return finetune_and_test(*model, seed);
}

}  // namespace

Outcome hybrid_gain(const Context& ctx) {
  Stopwatch sw;
  std::vector<double> hybrid;
  for (auto seed : kSeeds) {
    auto state = pretrained(ctx, kAlpha, seed);
    transformers::TransformerConfig base;
    base.patch = 1;
    base.num_classes = kClasses;
    const auto head = train::hybrid_head_config(state->config.backbone, TapPoint::layer2, 96, base);
    auto model = train::attach_frontend(*state, TapPoint::layer2, head, 96, seed);
    hybrid.push_back(finetune_and_test(*model, seed));
    std::cout << "  hybrid layer2 p1 seed " << seed << ": " << fmt(hybrid.back()) << std::endl;
  }

  std::map<int, std::vector<double>> vit;
  for (int patch : {8, 12, 16, 22, 24}) {
    for (auto seed : kSeeds) {
      transformers::TransformerConfig tc;
      tc.patch = patch;
      tc.num_classes = kClasses;
      transformers::TransformerClassifier model(tc, seed);
      vit[patch].push_back(finetune_and_test(*model, seed));
    }
    std::cout << "  ViT p" << patch << " from scratch: " << join(vit[patch]) << " mean " << fmt(mean(vit[patch]))
              << std::endl;
  }
  int best_patch = 0;
  double best = -1.0;
  for (const auto& [p, v] : vit) {
    if (mean(v) > best) best = mean(v), best_patch = p;
  }

  const double gap = mean(hybrid) - best;
  const double secs = sw.seconds();
  Outcome out;
  out.passed = gap >= 0.10 && secs <= 7200.0;
  out.summary = "hybrid " + fmt(mean(hybrid)) + " [" + join(hybrid) + "] vs best ViT p" + std::to_string(best_patch) +
                " " + fmt(best) + ", gain " + fmt(100 * gap, 1) + " pts (need >= 10.0), " + fmt(secs, 0) +
                " s (limit 7200)";
  return out;
}

Outcome low_level_transfer(const Context& ctx) {
  Stopwatch sw;
  std::vector<double> frozen, scratch;
  for (auto seed : kSeeds) {
    auto state = pretrained(ctx, kAlpha, seed);
    frozen.push_back(frozen_convnet_top1(*state, seed));
    train::ConvNetClassifier fresh(state->config.backbone, kClasses, seed);
    scratch.push_back(finetune_and_test(*fresh, seed));
    std::cout << "  seed " << seed << ": frozen-through-layer2 " << fmt(frozen.back()) << ", scratch "
              << fmt(scratch.back()) << std::endl;
  }
  const double gap = mean(frozen) - mean(scratch);
  const double secs = sw.seconds();
  Outcome out;
  out.passed = gap >= 0.05 && secs <= 3600.0;
  out.summary = "frozen " + fmt(mean(frozen)) + " [" + join(frozen) + "] vs scratch " + fmt(mean(scratch)) + " [" +
                join(scratch) + "], gain " + fmt(100 * gap, 1) + " pts (need >= 5.0), " + fmt(secs, 0) +
                " s (limit 3600)";
  return out;
}

Outcome leaky_rectifier(const Context& ctx) {
  Stopwatch sw;
  std::vector<double> leaky, plain;
  for (auto seed : kSeeds) {
    leaky.push_back(frozen_convnet_top1(*pretrained(ctx, kAlpha, seed), seed));
    plain.push_back(frozen_convnet_top1(*pretrained(ctx, 0.0, seed), seed));
    std::cout << "  seed " << seed << ": slope 0.01 " << fmt(leaky.back()) << ", slope 0 " << fmt(plain.back())
              << std::endl;
  }
  const double delta = mean(leaky) - mean(plain);
  const double secs = sw.seconds();
  Outcome out;
  out.passed = delta >= -0.01 && secs <= 7200.0;
  out.summary = "slope 0.01 " + fmt(mean(leaky)) + " [" + join(leaky) + "] vs slope 0 " + fmt(mean(plain)) + " [" +
                join(plain) + "], signed delta " + (delta >= 0 ? "+" : "") + fmt(100 * delta, 2) +
                " pts (need >= -1.00), " + fmt(secs, 0) + " s (limit 7200)";
  return out;
}

}  // namespace acceptance
