#include <gtest/gtest.h>

#include "hybridvit/backbone/config.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/transformers/attention.hpp"
#include "hybridvit/transformers/classifier.hpp"
#include "hybridvit/transformers/encoder.hpp"
#include "hybridvit/transformers/tokenizers.hpp"

#include "oracles.hpp"

using namespace hybridvit;
using namespace hybridvit::transformers;

namespace {

TransformerConfig tiny(HeadKind head, TokenizerKind tok, int64_t c, int64_t hw, int64_t patch) {
  TransformerConfig t;
  t.depth = 2;
  t.heads = 2;
  t.dim = 16;
  t.head_kind = head;
  t.tokenizer = tok;
  t.in_channels = c;
  t.in_height = hw;
  t.in_width = hw;
  t.patch = patch;
  t.conv.hidden_channels = 8;
  return t;
}

}  // namespace

TEST(Patchify, CountLawOverFeatureGrid) {
  // Spatial side per tap at 96 px and the patch ranges swept on each.
  const std::vector<std::pair<int, std::vector<int>>> grid{
      {24, {1, 2, 3, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24}},
      {12, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}},
      {6, {1, 2, 3, 4, 5, 6}},
      {3, {1, 2, 3}}};
  for (const auto& [side, patches] : grid) {
    for (int p : patches) {
      EXPECT_EQ(patch_count(side, side, p), oracle::count_patches(side, side, p));
      auto x = torch::rand({1, 2, side, side});
      EXPECT_EQ(patchify(x, p).size(1), oracle::count_patches(side, side, p));
    }
  }
  for (int p = 1; p <= 96; ++p) EXPECT_EQ(patch_count(96, 96, p), oracle::count_patches(96, 96, p));
  EXPECT_EQ(patch_count(96, 96, 96), 1);
  EXPECT_EQ(patch_count(24, 24, 14), 4);
  EXPECT_EQ(patch_count(12, 12, 1), 144);
}

TEST(Patchify, OrderAndZeroPadding) {
  auto x = torch::arange(2 * 5 * 5, torch::kFloat32).view({1, 2, 5, 5});
  auto t = patchify(x, 3);
  ASSERT_EQ(t.sizes(), (std::vector<int64_t>{1, 4, 18}));
  // Patch 1 is the top-right block: rows 0..2, cols 3..5 (col 5 is padding).
  for (int c = 0; c < 2; ++c) {
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) {
        const int col = 3 + k;
        const float want = col < 5 ? x[0][c][r][col].item<float>() : 0.0f;
        EXPECT_FLOAT_EQ(t[0][1][c * 9 + r * 3 + k].item<float>(), want);
      }
    }
  }
  EXPECT_FLOAT_EQ(t[0][3][17].item<float>(), 0.0f);
  EXPECT_THROW(patchify(x, 0), ConfigError);
}

TEST(Attention, SingleTokenReturnsValue) {
  auto q = torch::randn({1, 1, 4}), k = torch::randn({1, 1, 4}), v = torch::randn({1, 1, 4});
  auto [out, w] = transformers::scaled_dot_product_attention(q, k, v);
  EXPECT_TRUE(torch::allclose(out, v));
  EXPECT_FLOAT_EQ(w.item<float>(), 1.0f);
}

TEST(Attention, TwoTokenHandCase) {
  auto q = torch::tensor({1.0, 0.0}, torch::kFloat64).view({1, 2, 1});
  auto [out, w] = transformers::scaled_dot_product_attention(q, q, q);
  const auto s = oracle::softmax({1.0, 0.0});
  EXPECT_NEAR(w[0][0][0].item<double>(), s[0], 1e-12);
  EXPECT_NEAR(w[0][0][1].item<double>(), s[1], 1e-12);
  EXPECT_NEAR(w[0][0][0].item<double>(), 0.731, 1e-3);
  EXPECT_NEAR(out[0][0][0].item<double>(), s[0], 1e-12);
  EXPECT_NEAR(w[0][1][0].item<double>(), 0.5, 1e-12);
}

TEST(Attention, RowsSumToOne) {
  MultiHeadAttention mha(16, 4);
  auto [out, w] = mha->forward_with_weights(torch::randn({3, 7, 16}) * 5);
  EXPECT_EQ(w.sizes(), (std::vector<int64_t>{3, 4, 7, 7}));
  EXPECT_LE((w.sum(-1) - 1).abs().max().item<double>(), 1e-6);
  EXPECT_EQ(out.sizes(), (std::vector<int64_t>{3, 7, 16}));
  EXPECT_THROW(MultiHeadAttention(10, 4), ConfigError);
}

TEST(SeqPool, ConvexCombinationAndDegenerateCases) {
  SeqPool pool(8);
  auto x = torch::randn({4, 6, 8});
  auto w = pool->weights(x);
  EXPECT_TRUE((w > 0).all().item<bool>());
  EXPECT_LE((w.sum(-1) - 1).abs().max().item<double>(), 1e-6);
  auto y = pool->forward(x);
  EXPECT_TRUE((y <= std::get<0>(x.max(1)) + 1e-6).all().item<bool>());
  EXPECT_TRUE((y >= std::get<0>(x.min(1)) - 1e-6).all().item<bool>());
  auto one = torch::randn({2, 1, 8});
  EXPECT_TRUE(torch::allclose(pool->forward(one), one.squeeze(1)));
  {
    torch::NoGradGuard ng;
    pool->g->weight.zero_();
    pool->g->bias.zero_();
  }
  EXPECT_TRUE(torch::allclose(pool->forward(x), x.mean(1), 1e-5, 1e-6));
}

TEST(Encoder, SeqPoolSubnetworkIsPermutationInvariant) {
  TransformerClassifier m(tiny(HeadKind::seq_pool, TokenizerKind::patchify, 3, 8, 2), 1);
  m->eval();
  auto tokens = torch::randn({2, 16, 16});
  auto perm = torch::randperm(16);
  auto a = m->forward_tokens(tokens);
  auto b = m->forward_tokens(tokens.index_select(1, perm));
  EXPECT_TRUE(torch::allclose(a, b, 1e-5, 1e-5));
  EXPECT_FALSE(m->pos_embed.defined() && m->pos_embed.numel() > 0);
  EXPECT_FALSE(m->cls_token.defined() && m->cls_token.numel() > 0);
}

TEST(Vit, PermutationWithAttachedPositionsLeavesLogitsUnchanged) {
  TransformerClassifier m(tiny(HeadKind::class_token, TokenizerKind::patchify, 3, 4, 2), 2);
  m->eval();
  ASSERT_EQ(m->token_count(), 4);
  auto tokens = torch::randn({1, 4, 16});
  auto logits = m->forward_tokens(tokens);
  // Fold the per-token positions into the tokens, then drop them from the table.
  torch::Tensor attached;
  {
    torch::NoGradGuard ng;
    attached = tokens + m->pos_embed.slice(1, 1);
    m->pos_embed.slice(1, 1).zero_();
  }
  EXPECT_TRUE(torch::allclose(m->forward_tokens(attached), logits, 1e-5, 1e-5));
  auto perm = torch::tensor({2, 0, 3, 1}, torch::kLong);
  EXPECT_TRUE(torch::allclose(m->forward_tokens(attached.index_select(1, perm)), logits, 1e-5, 1e-5));
}

TEST(Vit, ZeroClassifierGivesUniformLogits) {
  TransformerClassifier m(tiny(HeadKind::class_token, TokenizerKind::patchify, 3, 16, 4), 3);
  {
    torch::NoGradGuard ng;
    m->head->weight.zero_();
    m->head->bias.zero_();
  }
  auto y = m->forward(torch::rand({2, 3, 16, 16}));
  EXPECT_TRUE(torch::equal(y, torch::zeros_like(y)));
  EXPECT_THROW(m->forward_tokens(torch::randn({1, 5, 16})), ShapeError);
}

TEST(Vit, ShapesForEveryHybridTapAndPatch) {
  backbone::BackboneConfig r50;
  for (auto tap : {backbone::TapPoint::layer2, backbone::TapPoint::layer3, backbone::TapPoint::layer4}) {
    const auto fs = backbone::feature_shape(r50, tap, 96);
    for (int p = 1; p <= fs.height; ++p) {
      TransformerClassifier m(tiny(HeadKind::class_token, TokenizerKind::patchify, fs.channels, fs.height, p), 4);
      EXPECT_EQ(m->token_count(), oracle::count_patches(fs.height, fs.width, p));
      EXPECT_EQ(m->pos_embed.size(1), m->token_count() + 1);
      auto y = m->forward(torch::randn({2, fs.channels, fs.height, fs.width}));
      EXPECT_EQ(y.sizes(), (std::vector<int64_t>{2, 5}));
    }
  }
}

TEST(Cct, ConvTokenCountMatchesStrideArithmetic) {
  for (int layers : {1, 2}) {
    for (int k : {3, 5, 7}) {
      ConvTokenizerSpec spec;
      spec.layers = layers;
      spec.kernel = k;
      spec.hidden_channels = 8;
      ConvTokenizer tok(3, 16, spec);
      int64_t side = 32;
      for (int l = 0; l < layers; ++l) side = oracle::conv_pool_side(side, k, 1, 3, 2);
      EXPECT_EQ(tok->token_count(32, 32), side * side);
      EXPECT_EQ(conv_block_output(32, spec), oracle::conv_pool_side(32, k, 1, 3, 2));
      auto y = tok->forward(torch::rand({2, 3, 32, 32}));
      EXPECT_EQ(y.sizes(), (std::vector<int64_t>{2, side * side, 16}));
    }
  }
  ConvTokenizer one(3, 16, ConvTokenizerSpec{});
  EXPECT_EQ(one->token_count(1, 1), 1);
  EXPECT_EQ(one->forward(torch::rand({1, 3, 1, 1})).size(1), 1);
}

TEST(Naming, ModelNamesParse) {
  auto cct = config_from_name("CCT2/3x1");
  EXPECT_EQ(cct.depth, 2);
  EXPECT_EQ(cct.conv.kernel, 3);
  EXPECT_EQ(cct.conv.layers, 1);
  EXPECT_EQ(cct.tokenizer, TokenizerKind::conv);
  EXPECT_EQ(cct.head_kind, HeadKind::seq_pool);
  auto cvt = config_from_name("CVT-7/8");
  EXPECT_EQ(cvt.depth, 7);
  EXPECT_EQ(cvt.patch, 8);
  EXPECT_EQ(cvt.tokenizer, TokenizerKind::patchify);
  EXPECT_EQ(cvt.head_kind, HeadKind::seq_pool);
  auto vit = config_from_name("ViT-4/12");
  EXPECT_EQ(vit.depth, 4);
  EXPECT_EQ(vit.patch, 12);
  EXPECT_TRUE(vit.has_class_token());
  EXPECT_EQ(config_from_name("ViT").depth, TransformerConfig{}.depth);
  EXPECT_THROW(config_from_name("Swin-2/4"), ConfigError);
  EXPECT_EQ(transformer_config_from_json(to_json(cct)), cct);
}

TEST(Config, ValidationCatchesInconsistentValues) {
  auto c = TransformerConfig{};
  c.dim = 130;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TransformerConfig{};
  c.patch = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(TransformerConfig{}.validate());
}

TEST(Encoder, PreNormResidualStructure) {
  EncoderBlock block(8, 2, 2.0);
  {
    torch::NoGradGuard ng;
    block->attn->proj->weight.zero_();
    block->attn->proj->bias.zero_();
    block->fc2->weight.zero_();
    block->fc2->bias.zero_();
  }
  auto x = torch::randn({2, 5, 8});
  EXPECT_TRUE(torch::equal(block->forward(x), x));
}
