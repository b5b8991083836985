#include <gtest/gtest.h>

#include "hybridvit/backbone/config.hpp"
#include "hybridvit/backbone/resnet.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/nn/adamw.hpp"
#include "hybridvit/nn/layers.hpp"
#include "hybridvit/nn/state.hpp"

using namespace hybridvit;
using namespace hybridvit::backbone;

namespace {

// Layer-by-layer count for a full-width network, written out independently.
int64_t hand_count(bool bottleneck, std::array<int, 4> blocks, int inner_factor) {
  auto conv = [](int64_t in, int64_t out, int64_t k) { return in * out * k * k; };
  auto bn = [](int64_t c) { return 2 * c; };
  int64_t total = conv(3, 64, 7) + bn(64);
  int64_t in = 64;
  const int64_t base[4] = {64, 128, 256, 512};
  for (int s = 0; s < 4; ++s) {
    const int64_t width = base[s] * inner_factor;
    const int64_t out = bottleneck ? base[s] * 4 : base[s];
    for (int b = 0; b < blocks[s]; ++b) {
      const bool needs_proj = b == 0 && (in != out || s > 0);
      if (bottleneck) {
        total += conv(in, width, 1) + bn(width) + conv(width, width, 3) + bn(width) +
                 conv(width, out, 1) + bn(out);
      } else {
        total += conv(in, out, 3) + bn(out) + conv(out, out, 3) + bn(out);
      }
      if (needs_proj) total += conv(in, out, 1) + bn(out);
      in = out;
    }
  }
  return total;
}

BackboneConfig full(Family f) {
  BackboneConfig c;
  c.family = f;
  c.width_multiplier = 1.0;
  return c;
}

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

}  // namespace

TEST(Config, FullWidthCountsMatchHandCount) {
  EXPECT_EQ(count_params(full(Family::r50)), hand_count(true, {3, 4, 6, 3}, 1));
  EXPECT_EQ(count_params(full(Family::r18)), hand_count(false, {2, 2, 2, 2}, 1));
  EXPECT_EQ(count_params(full(Family::wide50)), hand_count(true, {3, 4, 6, 3}, 2));
  EXPECT_EQ(count_params(full(Family::wide101)), hand_count(true, {3, 4, 23, 3}, 2));
  EXPECT_NEAR(count_params(full(Family::r50)) / 23.5e6, 1.0, 0.02);
}

TEST(Config, CountMatchesConstructedModule) {
  for (auto f : {Family::r18, Family::r50, Family::wide50}) {
    BackboneConfig c;
    c.family = f;
    Backbone net(c, 1);
    EXPECT_EQ(nn::count_all(*net), count_params(c)) << to_string(f);
    EXPECT_EQ(count_params_through(c, 4), count_params(c));
  }
}

TEST(Config, ChannelsRoundToDivisor) {
  EXPECT_EQ(scaled_channels(64, 0.125), 8);
  EXPECT_EQ(scaled_channels(64, 0.01), kChannelDivisor);
  EXPECT_EQ(scaled_channels(256, 0.125), 32);
  EXPECT_EQ(scaled_channels(100, 1.0), 104);
  for (double m : {0.05, 0.125, 0.3, 0.5, 1.0}) {
    const auto w = stage_widths(BackboneConfig{Family::r50, m, true});
    EXPECT_GT(w.stem, 0);
    for (int s = 0; s < 4; ++s) EXPECT_EQ(w.output[s] % kChannelDivisor, 0);
  }
}

TEST(Config, WidthDoublingQuadruplesStageConvs) {
  // Stage 3 of r50 has only internal convs plus one projection; all scale with in*out.
  BackboneConfig a{Family::r50, 0.25, true}, b{Family::r50, 0.5, true};
  auto stage = [](const BackboneConfig& c) {
    return count_params_through(c, 3) - count_params_through(c, 2);
  };
  EXPECT_NEAR(static_cast<double>(stage(b)) / stage(a), 4.0, 0.05);
}

TEST(Shape, FullWidthTable) {
  EXPECT_EQ(feature_shape(full(Family::r50), TapPoint::layer2, 96), (FeatureShape{512, 12, 12}));
  EXPECT_EQ(feature_shape(full(Family::r18), TapPoint::layer4, 96), (FeatureShape{512, 3, 3}));
  EXPECT_EQ(feature_shape(full(Family::r50), TapPoint::layer3, 96), (FeatureShape{1024, 6, 6}));
  EXPECT_EQ(feature_shape(full(Family::r50), TapPoint::layer1, 4).height, 1);
  EXPECT_THROW(feature_shape(full(Family::r50), TapPoint::layer4, 16), ShapeError);
}

TEST(Shape, ForwardMatchesLawForEveryCombination) {
  torch::NoGradGuard ng;
  for (auto f : {Family::r18, Family::r50, Family::wide50}) {
    BackboneConfig c;
    c.family = f;
    Backbone net(c, 3);
    net->eval();
    for (int hw : {32, 64, 96}) {
      auto x = torch::rand({1, 3, hw, hw});
      for (auto tap : {TapPoint::layer1, TapPoint::layer2, TapPoint::layer3, TapPoint::layer4}) {
        const auto want = feature_shape(c, tap, hw);
        const auto y = net->forward_to(x, tap);
        EXPECT_EQ(y.size(1), want.channels);
        EXPECT_EQ(y.size(2), ceil_div(hw, tap_stride(tap)));
        EXPECT_EQ(y.size(2), want.height);
        EXPECT_EQ(y.size(3), want.width);
        EXPECT_TRUE(torch::isfinite(y).all().item<bool>());
      }
    }
  }
}

TEST(Forward, SplitAtTapComposes) {
  torch::NoGradGuard ng;
  Backbone net(BackboneConfig{}, 4);
  net->eval();
  auto x = torch::rand({2, 3, 64, 64});
  auto whole = net->forward_to(x, TapPoint::layer4);
  auto split = net->forward_from(net->forward_to(x, TapPoint::layer2), TapPoint::layer2);
  EXPECT_TRUE(torch::equal(whole, split));
  EXPECT_EQ(net->forward_pooled(x).sizes(), (std::vector<int64_t>{2, net->feature_dim()}));
  auto single = forward_to_tap(net, x[0], TapPoint::layer3);
  EXPECT_TRUE(torch::allclose(single, net->forward_to(x, TapPoint::layer3)[0], 1e-5, 1e-6));
}

TEST(Forward, DeterministicInitAndOutput) {
  Backbone a(BackboneConfig{}, 9), b(BackboneConfig{}, 9), c(BackboneConfig{}, 10);
  EXPECT_EQ(nn::state_hash(*a), nn::state_hash(*b));
  EXPECT_NE(nn::state_hash(*a), nn::state_hash(*c));
  a->eval();
  auto x = torch::rand({1, 3, 32, 32});
  EXPECT_TRUE(torch::equal(a->forward_to(x, TapPoint::layer2), a->forward_to(x, TapPoint::layer2)));
}

TEST(Forward, ZeroInitResidualGivesIdentityPath) {
  Backbone net(BackboneConfig{}, 1);
  for (int s = 1; s <= 4; ++s) {
    auto list = std::dynamic_pointer_cast<torch::nn::ModuleListImpl>(net->stage(s));
    ASSERT_TRUE(list);
    for (const auto& m : *list) {
      auto block = std::dynamic_pointer_cast<ResidualBlockImpl>(m);
      ASSERT_TRUE(block);
      EXPECT_EQ(block->last_bn()->weight.abs().sum().item<double>(), 0.0);
    }
  }
}

TEST(Freeze, MaskPartitionsAndLocksStages) {
  Backbone net(BackboneConfig{}, 5);
  const auto all = nn::named_parameters(*net);
  for (auto tap : {TapPoint::layer1, TapPoint::layer2, TapPoint::layer3, TapPoint::layer4}) {
    const auto mask = freeze_through(net, tap);
    EXPECT_EQ(mask.frozen.size() + mask.trainable.size(), all.size());
    for (const auto& name : mask.frozen) {
      EXPECT_EQ(std::count(mask.trainable.begin(), mask.trainable.end(), name), 0);
    }
    for (const auto& [name, p] : all) {
      int stage = 0;
      if (name.rfind("layer", 0) == 0) stage = name[5] - '0';
      EXPECT_EQ(mask.is_frozen(name), stage <= stage_index(tap)) << name;
      EXPECT_EQ(p.requires_grad(), !mask.is_frozen(name));
    }
    for (int s = 0; s <= 4; ++s) {
      for (const auto& bn : net->stage_batch_norms(s)) EXPECT_EQ(bn->locked(), s <= stage_index(tap));
    }
  }
  EXPECT_EQ(freeze_through(net, TapPoint::layer4).trainable.size(), 0u);
  EXPECT_EQ(freeze_through(net, std::nullopt).frozen.size(), 0u);
  EXPECT_EQ(freeze_mask(net).frozen.size(), 0u);
}

TEST(Freeze, FrozenBytesSurviveTrainingAndGradientsFlowElsewhere) {
  for (auto tap : {TapPoint::layer1, TapPoint::layer2, TapPoint::layer3}) {
    Backbone net(BackboneConfig{Family::r18, 0.125, false}, 6);
    const auto mask = freeze_through(net, tap);
    std::map<std::string, torch::Tensor> before;
    for (const auto& [n, t] : nn::collect_state(*net)) before[n] = t.clone();
    nn::AdamW opt(nn::named_parameters(*net), {});
    net->train();
    bool trainable_grad = false;
    for (int step = 0; step < 10; ++step) {
      opt.zero_grad();
      auto y = net->forward_pooled(torch::rand({4, 3, 32, 32}));
      y.pow(2).sum().backward();
      for (const auto& [n, p] : nn::named_parameters(*net)) {
        if (mask.is_frozen(n)) {
          EXPECT_FALSE(p.grad().defined() && p.grad().abs().sum().item<double>() != 0.0);
        } else if (p.grad().defined() && p.grad().abs().sum().item<double>() > 0) {
          trainable_grad = true;
        }
      }
      opt.step();
    }
    EXPECT_TRUE(trainable_grad);
    for (const auto& [n, t] : nn::collect_state(*net)) {
      int stage = 0;
      if (n.rfind("layer", 0) == 0) stage = n[5] - '0';
      if (n.find("num_batches") != std::string::npos) continue;
      if (stage <= stage_index(tap)) {
        EXPECT_TRUE(torch::equal(before[n], t)) << n;
      } else if (n.find("running_mean") != std::string::npos) {
        EXPECT_FALSE(torch::equal(before[n], t)) << n;
      }
    }
  }
}

TEST(Names, FollowStageBlockLayerScheme) {
  Backbone net(BackboneConfig{}, 1);
  bool found = false;
  for (const auto& [n, t] : nn::collect_state(*net)) {
    if (n == "layer2.0.downsample_bn.running_var") found = true;
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(parse_family("wide50"), Family::wide50);
  EXPECT_EQ(parse_tap("layer3"), TapPoint::layer3);
  EXPECT_THROW(parse_tap("layer5"), ConfigError);
}
