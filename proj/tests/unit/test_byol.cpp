#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "hybridvit/augment/pipeline.hpp"
#include "hybridvit/byol/byol.hpp"
#include "hybridvit/byol/loss.hpp"
#include "hybridvit/byol/mlp_head.hpp"
#include "hybridvit/byol/pretrain.hpp"
#include "hybridvit/data/dataset.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/nn/layers.hpp"
#include "hybridvit/nn/state.hpp"
#include "hybridvit/rng.hpp"

#include "oracles.hpp"

using namespace hybridvit;
using namespace hybridvit::byol;
namespace fs = std::filesystem;

namespace {

ByolConfig small_config() {
  ByolConfig c;
  c.backbone.family = backbone::Family::r18;
  c.hidden_dim = 32;
  c.proj_dim = 16;
  return c;
}

PretrainConfig small_pretrain(int epochs) {
  PretrainConfig p;
  p.model = small_config();
  p.epochs = epochs;
  p.batch_size = 4;
  return p;
}

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("hybridvit_byol_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(LeakyRect, DefinitionAndDegenerateSlope) {
  EXPECT_DOUBLE_EQ(leaky_rect(2.0, 0.01), 2.0);
  EXPECT_DOUBLE_EQ(leaky_rect(-2.0, 0.01), -0.02);
  EXPECT_DOUBLE_EQ(leaky_rect(-2.0, 0.0), 0.0);
  auto x = torch::randn({64}, torch::kFloat64);
  EXPECT_TRUE(torch::equal(leaky_rect(x, 0.0), x.clamp_min(0)));
  EXPECT_TRUE(torch::allclose(leaky_rect(x, 0.2), torch::where(x >= 0, x, 0.2 * x)));
}

TEST(MlpHead, LayerOrderIsLinearNormRectLinear) {
  MlpHead head(MlpHeadConfig{6, 10, 4, 0.01});
  auto gen = nn::make_generator(1);
  head->init_parameters(gen);
  head->train();
  auto x = torch::randn({8, 6});
  auto h = head->fc1->forward(x);
  auto mean = h.mean(0, true);
  auto var = h.var(0, false, true);
  auto bn = (h - mean) / torch::sqrt(var + 1e-5) * head->bn->weight + head->bn->bias;
  auto want = head->fc2->forward(torch::where(bn >= 0, bn, 0.01 * bn));
  MlpHead copy(MlpHeadConfig{6, 10, 4, 0.01});
  nn::copy_state(*head, *copy);
  copy->train();
  EXPECT_TRUE(torch::allclose(copy->forward(x), want, 1e-4, 1e-5));
  std::vector<std::string> names;
  for (const auto& [n, t] : nn::named_parameters(*head)) names.push_back(n);
  EXPECT_EQ(names, (std::vector<std::string>{"fc1.weight", "fc1.bias", "bn.weight", "bn.bias",
                                             "fc2.weight", "fc2.bias"}));
}

TEST(RegressionLoss, MatchesCosineOracleAndBounds) {
  RngStream rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> q(7), z(7);
    for (auto& v : q) v = rng.uniform(-1, 1);
    for (auto& v : z) v = rng.uniform(-1, 1);
    const double want = oracle::cosine_loss(q, z);
    EXPECT_NEAR(regression_loss(q, z), want, 1e-12);
    auto tq = torch::tensor(q, torch::kFloat64).unsqueeze(0);
    auto tz = torch::tensor(z, torch::kFloat64).unsqueeze(0);
    EXPECT_NEAR(regression_loss(tq, tz)[0].item<double>(), want, 1e-12);
  }
  std::vector<double> a{1, 2, 3}, neg{-1, -2, -3}, zero{0, 0, 0};
  EXPECT_NEAR(regression_loss(a, a), 0.0, 1e-12);
  EXPECT_NEAR(regression_loss(a, neg), 4.0, 1e-12);
  EXPECT_TRUE(std::isfinite(regression_loss(zero, a)));
  auto q = torch::randn({32, 5}), z = torch::randn({32, 5});
  auto l = regression_loss(q, z);
  EXPECT_TRUE((l >= 0).all().item<bool>() && (l <= 4).all().item<bool>());
}

TEST(RegressionLoss, TargetSideReceivesNoGradient) {
  auto q = torch::randn({4, 3}, torch::requires_grad());
  auto z = torch::randn({4, 3}, torch::requires_grad());
  regression_loss(q, z).sum().backward();
  EXPECT_TRUE(q.grad().defined());
  EXPECT_FALSE(z.grad().defined());
}

TEST(Ema, AlgebraicCases) {
  std::vector<torch::Tensor> online{torch::randn({3, 3}), torch::randn({5})};
  auto fresh = [&] { return std::vector<torch::Tensor>{torch::randn({3, 3}), torch::randn({5})}; };
  auto t0 = fresh();
  ema_update(online, t0, 0.0);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(torch::equal(t0[i], online[i]));
  auto t1 = fresh();
  auto t1_before = std::vector<torch::Tensor>{t1[0].clone(), t1[1].clone()};
  ema_update(online, t1, 1.0);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(torch::equal(t1[i], t1_before[i]));
  auto th = fresh();
  auto want = std::vector<torch::Tensor>{(th[0] + online[0]) / 2, (th[1] + online[1]) / 2};
  ema_update(online, th, 0.5);
  for (int i = 0; i < 2; ++i) EXPECT_TRUE(torch::equal(th[i], want[i]));
  std::vector<torch::Tensor> bad{torch::zeros({2})};
  EXPECT_THROW(ema_update(online, bad, 0.5), ShapeError);
}

TEST(Tau, ConstantAndCosineRamp) {
  auto c = small_config();
  EXPECT_DOUBLE_EQ(tau_at(c, 7, 100), 0.99);
  c.tau_schedule = TauSchedule::cosine;
  EXPECT_NEAR(tau_at(c, 0, 100), 0.99, 1e-12);
  EXPECT_NEAR(tau_at(c, 100, 100), 1.0, 1e-12);
  EXPECT_NEAR(tau_at(c, 50, 100), 1 - 0.01 * 0.5, 1e-12);
  for (int k = 1; k <= 100; ++k) EXPECT_GE(tau_at(c, k, 100), tau_at(c, k - 1, 100));
}

TEST(Network, TargetMirrorsOnlineAndIsFrozen) {
  ByolNetwork net(small_config(), 2);
  auto online = net->online_shared_parameters();
  auto target = net->target_parameters();
  ASSERT_EQ(online.size(), target.size());
  for (std::size_t i = 0; i < online.size(); ++i) {
    EXPECT_EQ(online[i].sizes(), target[i].sizes());
    EXPECT_TRUE(torch::equal(online[i], target[i]));
    EXPECT_FALSE(target[i].requires_grad());
  }
  EXPECT_TRUE(net->online->predictor);
  EXPECT_FALSE(net->target->predictor);
}

TEST(Network, LossIsSymmetricMeanOfTwoTerms) {
  ByolNetwork net(small_config(), 3);
  net->train();
  auto a = torch::rand({4, 3, 32, 32}), b = torch::rand({4, 3, 32, 32});
  const double ab = net->loss(a, b).item<double>();
  const double ba = net->loss(b, a).item<double>();
  EXPECT_NEAR(ab, ba, 1e-5);
  EXPECT_GE(ab, 0.0);
  EXPECT_LE(ab, 8.0);
}

TEST(Step, UpdatesOnlineAndMovesTargetByEma) {
  ByolState state(small_config(), 4);
  auto ds = data::make_synthetic_dataset(10, 5, 32, 1, data::Split::unlabeled);
  const auto aug = augment::build_pipeline("data_aug_5", 32);
  std::vector<torch::Tensor> online_before, target_before;
  for (auto& t : state.network->online_shared_parameters()) online_before.push_back(t.clone());
  for (auto& t : state.network->target_parameters()) target_before.push_back(t.clone());
  RngStream rng(5);
  const auto r = byol_step(state, ds.images, aug, rng, 0.9);
  EXPECT_TRUE(std::isfinite(r.loss));
  EXPECT_DOUBLE_EQ(r.tau, 0.9);
  EXPECT_EQ(state.step, 1);
  const auto online = state.network->online_shared_parameters();
  const auto target = state.network->target_parameters();
  bool changed = false;
  for (std::size_t i = 0; i < online.size(); ++i) {
    changed |= !torch::equal(online[i], online_before[i]);
    EXPECT_TRUE(torch::allclose(target[i], 0.9 * target_before[i] + 0.1 * online[i], 1e-5, 1e-6));
    EXPECT_FALSE(target[i].grad().defined());
  }
  EXPECT_TRUE(changed);
}

TEST(Step, ViewsComeFromTheGivenStream) {
  auto ds = data::make_synthetic_dataset(5, 5, 32, 1, data::Split::unlabeled);
  const auto aug = augment::build_pipeline("data_aug_5", 32);
  RngStream a(8), b(8);
  auto va = make_views(ds.images, aug, a);
  auto vb = make_views(ds.images, aug, b);
  EXPECT_TRUE(torch::equal(va.first, vb.first));
  EXPECT_TRUE(torch::equal(va.second, vb.second));
  EXPECT_FALSE(torch::equal(va.first, va.second));
  EXPECT_FALSE(pipeline_normalization(aug).has_value());
  EXPECT_TRUE(pipeline_normalization(augment::build_pipeline("data_aug_1")).has_value());
}

TEST(Config, JsonRoundTrip) {
  auto c = small_config();
  c.tau_schedule = TauSchedule::cosine;
  c.slope = 0.0;
  EXPECT_EQ(byol_config_from_json(to_json(c)), c);
}

TEST(Pretrain, DeterministicAndResumable) {
  auto ds = data::make_synthetic_dataset(10, 5, 32, 2, data::Split::unlabeled);
  std::vector<double> full_losses, again_losses, resumed_losses;
  auto cfg = small_pretrain(2);
  const auto dir = temp_dir("resume");
  cfg.checkpoint_dir = dir;
  cfg.save_every = 1;
  auto full = pretrain(ds, cfg, 11, {[&](int64_t, double l) { full_losses.push_back(l); }, {}});
  auto again = pretrain(ds, small_pretrain(2), 11, {[&](int64_t, double l) { again_losses.push_back(l); }, {}});
  EXPECT_EQ(full_losses, again_losses);
  // 10 images in batches of 4: 4, 4, 2 -> three steps per epoch.
  EXPECT_EQ(full_losses.size(), 6u);
  ASSERT_TRUE(fs::exists(dir / "byol-epoch1.ckpt"));
  auto resumed = pretrain(ds, small_pretrain(2), 11,
                          {[&](int64_t, double l) { resumed_losses.push_back(l); }, {}},
                          dir / "byol-epoch1.ckpt");
  EXPECT_EQ(resumed_losses, std::vector<double>(full_losses.begin() + 3, full_losses.end()));
  EXPECT_EQ(nn::state_hash(*resumed.state->network), nn::state_hash(*full.state->network));
  EXPECT_EQ(resumed.history.to_csv().substr(0, 40), full.history.to_csv().substr(0, 40));
  EXPECT_EQ(resumed.history.split("pretrain").size(), 2u);
  fs::remove_all(dir);
}

TEST(Pretrain, CheckpointRestoresEveryTensor) {
  auto ds = data::make_synthetic_dataset(5, 5, 32, 2, data::Split::unlabeled);
  auto run = pretrain(ds, small_pretrain(1), 3);
  auto ckpt = save_state(*run.state, run.history, 3, "abc");
  train::MetricsHistory h;
  auto back = load_state(ckpt, &h);
  EXPECT_EQ(nn::state_hash(*back->network), nn::state_hash(*run.state->network));
  EXPECT_EQ(back->step, run.state->step);
  EXPECT_EQ(back->epoch, 1);
  EXPECT_EQ(back->config, run.state->config);
  EXPECT_EQ(h.to_csv(), run.history.to_csv());
  EXPECT_EQ(back->optimizer->step_count(), run.state->optimizer->step_count());
}

TEST(Pretrain, SingleImageTailIsDropped) {
  auto ds = data::make_synthetic_dataset(5, 5, 32, 2, data::Split::unlabeled);
  int steps = 0;
  pretrain(ds, small_pretrain(1), 3, {[&](int64_t, double) { ++steps; }, {}});
  EXPECT_EQ(steps, 1);  // batch of 4, then a lone image
}
