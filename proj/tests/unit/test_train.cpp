#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "hybridvit/byol/byol.hpp"
#include "hybridvit/data/dataset.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/nn/layers.hpp"
#include "hybridvit/nn/state.hpp"
#include "hybridvit/train/checkpoint.hpp"
#include "hybridvit/train/metrics.hpp"
#include "hybridvit/train/models.hpp"
#include "hybridvit/train/trainer.hpp"

using namespace hybridvit;
using namespace hybridvit::train;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("hybridvit_train_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

backbone::BackboneConfig small_backbone() {
  backbone::BackboneConfig c;
  c.family = backbone::Family::r18;
  return c;
}

transformers::TransformerConfig tiny_head() {
  transformers::TransformerConfig t;
  t.depth = 1;
  t.heads = 2;
  t.dim = 16;
  t.patch = 1;
  return t;
}

TrainHp quick_hp(int epochs) {
  TrainHp hp;
  hp.epochs = epochs;
  hp.batch_size = 5;
  hp.lr = 1e-3;
  hp.aug = "aug_3";
  hp.seed = 3;
  return hp;
}

}  // namespace

TEST(Metrics, RejectsInvalidRecords) {
  MetricsHistory h;
  h.add({1, "train", 0.5, 1.0, 1e-4, 0.1});
  EXPECT_THROW(h.add({1, "train", 0.5, 1.0, 1e-4, 0.2}), Error);
  EXPECT_THROW(h.add({2, "train", 1.5, 1.0, 1e-4, 0.2}), Error);
  EXPECT_THROW(h.add({2, "train", 0.5, std::nan(""), 1e-4, 0.2}), Error);
  h.add({1, "val", 0.4, 1.1, 1e-4, 0.2});
  h.add({2, "train", std::nullopt, 0.9, 1e-4, 0.3});
  EXPECT_EQ(h.split("train").size(), 2u);
  EXPECT_EQ(h.last("val")->epoch, 1);
  EXPECT_FALSE(h.last("test").has_value());
}

TEST(Metrics, CsvRoundTripIsExact) {
  MetricsHistory h;
  h.add({1, "pretrain", std::nullopt, 2.123456789012345, 1e-4, 0.5});
  h.add({1, "val", 0.3, 1.0 / 3.0, 1e-4, 0.75});
  const auto csv = h.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kMetricsHeader);
  const auto back = MetricsHistory::from_csv(csv);
  EXPECT_EQ(back.records(), h.records());
  EXPECT_THROW(MetricsHistory::from_csv("a,b\n1,2\n"), Error);
}

TEST(Checkpoint, RoundTripsEveryDtype) {
  Checkpoint c;
  c.kind = "test";
  c.config_hash = "0123456789abcdef";
  c.meta = {{"step", 7}, {"note", "x"}};
  c.tensors = {{"f32", torch::randn({2, 3})},
               {"f64", torch::randn({4}, torch::kFloat64)},
               {"i64", torch::arange(5)},
               {"i32", torch::arange(3, torch::kInt32)},
               {"b", torch::tensor({true, false})},
               {"scalar", torch::tensor(1.5)}};
  const auto back = decode_checkpoint(encode_checkpoint(c), "0123456789abcdef");
  EXPECT_EQ(back.kind, "test");
  EXPECT_EQ(back.meta, c.meta);
  ASSERT_EQ(back.tensors.size(), c.tensors.size());
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    EXPECT_EQ(back.tensors[i].first, c.tensors[i].first);
    EXPECT_EQ(back.tensors[i].second.dtype(), c.tensors[i].second.dtype());
    EXPECT_TRUE(torch::equal(back.tensors[i].second, c.tensors[i].second));
  }
  EXPECT_THROW(back.tensor("missing"), CheckpointError);
  EXPECT_EQ(back.with_prefix("f").size(), 2u);
}

TEST(Checkpoint, DetectsCorruptionAndMismatch) {
  Checkpoint c;
  c.kind = "test";
  c.config_hash = "aaaa";
  c.tensors = {{"w", torch::ones({16})}};
  const auto bytes = encode_checkpoint(c);
  auto flipped = bytes;
  flipped[flipped.size() - 10] ^= 0x40;
  EXPECT_THROW(decode_checkpoint(flipped), CheckpointError);
  auto magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(magic), CheckpointError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, 20)), CheckpointError);
  EXPECT_THROW(decode_checkpoint(bytes, std::string("bbbb")), CheckpointError);
  EXPECT_EQ(bytes.substr(0, 8), "HVITCKPT");
}

TEST(Checkpoint, FileWriteLeavesNoTemporaries) {
  const auto dir = temp_dir("ckpt");
  Checkpoint c;
  c.kind = "k";
  c.tensors = {{"w", torch::ones({2})}};
  write_checkpoint(dir / "a.ckpt", c);
  write_checkpoint(dir / "a.ckpt", c);
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
  EXPECT_EQ(files, 1);
  EXPECT_EQ(read_checkpoint(dir / "a.ckpt").kind, "k");
  EXPECT_THROW(read_checkpoint(dir / "missing.ckpt"), CheckpointError);
  fs::remove_all(dir);
}

TEST(Evaluate, ArgmaxTiesGoLowAndFlagRestored) {
  auto logits = torch::tensor({1.0, 3.0, 3.0, 0.0, 0.0, 0.0}).view({2, 3});
  EXPECT_TRUE(torch::equal(argmax_lowest(logits), torch::tensor({1, 0}, torch::kLong)));
  auto ds = data::make_synthetic_dataset(10, 5, 32, 1);
  ConvNetClassifier m(small_backbone(), 5, 1);
  m->train();
  auto r = evaluate(*m, ds, 4);
  EXPECT_TRUE(m->is_training());
  EXPECT_GE(r.top1, 0.0);
  EXPECT_LE(r.top1, 1.0);
  EXPECT_TRUE(std::isfinite(r.loss));
}

TEST(Hp, ValidationRejectsNonPositiveValues) {
  TrainHp hp;
  EXPECT_NO_THROW(hp.validate());
  hp.lr = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = TrainHp{};
  hp.batch_size = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = TrainHp{};
  hp.epochs = 0;
  EXPECT_THROW(hp.validate(), ConfigError);
  hp = TrainHp{};
  hp.aug = "nope";
  EXPECT_THROW(hp.validate(), ConfigError);
}

TEST(Hybrid, ExtractorNeverChangesAndHasOneHead) {
  byol::ByolConfig bc;
  bc.backbone = small_backbone();
  bc.hidden_dim = 32;
  bc.proj_dim = 16;
  byol::ByolState state(bc, 2);
  auto head = hybrid_head_config(bc.backbone, backbone::TapPoint::layer2, 32, tiny_head());
  auto model = attach_frontend(state, backbone::TapPoint::layer2, head, 32, 4);
  EXPECT_EQ(nn::state_hash(*model->extractor), nn::state_hash(*state.network->online->backbone));
  const auto before = nn::state_hash(*model->extractor);
  const auto head_before = nn::state_hash(*model->head);
  auto ds = data::make_synthetic_dataset(10, 5, 32, 5);
  auto hp = quick_hp(3);
  hp.val_fraction = 0.0;
  finetune(*model, ds, hp);
  EXPECT_EQ(nn::state_hash(*model->extractor), before);
  EXPECT_NE(nn::state_hash(*model->head), head_before);
  for (const auto& [n, p] : nn::named_parameters(*model)) {
    EXPECT_EQ(p.requires_grad(), n.rfind("extractor.", 0) != 0) << n;
  }
  int heads = 0;
  for (const auto& item : model->named_modules()) {
    if (auto lin = std::dynamic_pointer_cast<torch::nn::LinearImpl>(item.value()); lin && lin->options.out_features() == 5) ++heads;
  }
  EXPECT_EQ(heads, 1);
  auto wrong = head;
  wrong.in_channels += 8;
  EXPECT_THROW(attach_frontend(state, backbone::TapPoint::layer2, wrong, 32, 4), ShapeError);
}

TEST(ConvNet, FrozenStagesStayBitIdentical) {
  byol::ByolConfig bc;
  bc.backbone = small_backbone();
  bc.hidden_dim = 32;
  bc.proj_dim = 16;
  byol::ByolState state(bc, 3);
  auto m = convnet_from_byol(state, backbone::TapPoint::layer2, 5, 1);
  std::map<std::string, torch::Tensor> before;
  for (const auto& [n, t] : nn::collect_state(*m)) before[n] = t.clone();
  auto ds = data::make_synthetic_dataset(10, 5, 32, 5);
  auto hp = quick_hp(2);
  hp.val_fraction = 0.0;
  finetune(*m, ds, hp);
  for (const auto& [n, t] : nn::collect_state(*m)) {
    const bool frozen = n.rfind("backbone.stem", 0) == 0 || n.rfind("backbone.layer1", 0) == 0 ||
                        n.rfind("backbone.layer2", 0) == 0;
    if (frozen) {
      EXPECT_TRUE(torch::equal(before[n], t)) << n;
    }
  }
  EXPECT_FALSE(torch::equal(before["fc.weight"], m->fc->weight));
}

TEST(Finetune, DeterministicResumableAndRecordsSplits) {
  auto ds = data::make_synthetic_dataset(20, 5, 32, 6);
  const auto dir = temp_dir("resume");
  auto run = [&](int epochs, const fs::path& resume, std::vector<double>* losses) {
    ConvNetClassifier m(small_backbone(), 5, 9);
    auto hp = quick_hp(epochs);
    hp.checkpoint_dir = dir;
    hp.save_every = 1;
    TrainHooks hooks;
    hooks.on_step = [&](int64_t, double l) { losses->push_back(l); };
    auto r = finetune(*m, ds, hp, hooks, resume);
    return std::make_pair(nn::state_hash(*m), r);
  };
  std::vector<double> a, b, c;
  auto full = run(3, {}, &a);
  auto again = run(3, {}, &b);
  EXPECT_EQ(a, b);
  EXPECT_EQ(full.first, again.first);
  // 4 images per class; each class keeps at least one for validation, so
  // 15 train images in batches of 5 give three steps per epoch.
  ASSERT_EQ(a.size(), 9u);
  std::string ckpt;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().filename().string().find("epoch1") != std::string::npos) ckpt = e.path();
  }
  ASSERT_FALSE(ckpt.empty());
  auto resumed = run(3, ckpt, &c);
  EXPECT_EQ(c, std::vector<double>(a.begin() + 3, a.end()));
  EXPECT_EQ(resumed.first, full.first);
  EXPECT_EQ(resumed.second.best_epoch, full.second.best_epoch);
  const auto& h = full.second.history;
  EXPECT_EQ(h.split("train").size(), 3u);
  EXPECT_EQ(h.split("val").size(), 3u);
  ASSERT_TRUE(full.second.best_val_top1.has_value());
  double best = -1;
  for (const auto& r : h.split("val")) best = std::max(best, *r.top1);
  EXPECT_DOUBLE_EQ(*full.second.best_val_top1, best);
  fs::remove_all(dir);
}

TEST(Finetune, EarlyStopOnTrainAccuracy) {
  auto ds = data::make_synthetic_dataset(10, 5, 32, 6);
  ConvNetClassifier m(small_backbone(), 5, 9);
  auto hp = quick_hp(50);
  hp.val_fraction = 0.0;
  hp.aug = "no_aug";
  hp.stop_at_train_top1 = 0.0;
  auto r = finetune(*m, ds, hp);
  EXPECT_EQ(r.history.split("train").size(), 1u);
}

TEST(Models, SaveLoadRoundTrip) {
  const auto dir = temp_dir("model");
  ConvNetClassifier a(small_backbone(), 5, 1), b(small_backbone(), 5, 2);
  save_model(*a, dir / "m.ckpt", {{"k", 1}}, "hash1");
  EXPECT_THROW(load_model(*b, dir / "m.ckpt", std::string("hash2")), CheckpointError);
  load_model(*b, dir / "m.ckpt", std::string("hash1"));
  EXPECT_EQ(nn::state_hash(*a), nn::state_hash(*b));
  fs::remove_all(dir);
}
