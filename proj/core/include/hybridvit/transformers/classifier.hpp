#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "hybridvit/nn/classifier.hpp"
#include "hybridvit/transformers/encoder.hpp"
#include "hybridvit/transformers/tokenizers.hpp"

namespace hybridvit::transformers {

enum class HeadKind { class_token, seq_pool };
enum class TokenizerKind { patchify, conv };

struct TransformerConfig {
  int64_t depth = 6;
  int64_t heads = 4;
  int64_t dim = 128;
  double mlp_ratio = 2.0;
  HeadKind head_kind = HeadKind::class_token;
  TokenizerKind tokenizer = TokenizerKind::patchify;
  int64_t patch = 16;
  ConvTokenizerSpec conv;
  int64_t num_classes = 5;
  /// Shape of the tokenizer input (raw image or tapped feature map).
  int64_t in_channels = 3;
  int64_t in_height = 96;
  int64_t in_width = 96;

  bool has_class_token() const noexcept { return head_kind == HeadKind::class_token; }
  /// Throws ConfigError on inconsistent values.
  void validate() const;

  bool operator==(const TransformerConfig&) const = default;
};

nlohmann::json to_json(const TransformerConfig& c);
TransformerConfig transformer_config_from_json(const nlohmann::json& j);

/// Applies a model name on top of `base`:
///   "ViT" / "ViT-L/p"  class token, patchify (depth L, patch p when given)
///   "CVT-L/p"          sequence pooling, patchify
///   "CCTL/kxc"         sequence pooling, c conv layers with k x k kernels
TransformerConfig config_from_name(std::string_view name, TransformerConfig base = {});

/// Tokenizer, encoder blocks, final LayerNorm and linear classifier.
/// A learned positional table is present iff the head uses a class token.
class TransformerClassifierImpl : public nn::ClassifierBase {
 public:
  TransformerClassifierImpl(TransformerConfig config, std::uint64_t init_seed);

  torch::Tensor forward(const torch::Tensor& input) override;
  int64_t num_classes() const override { return config_.num_classes; }

  torch::Tensor tokenize(const torch::Tensor& input);
  /// Logits from already-embedded tokens [B, N, d].
  torch::Tensor forward_tokens(const torch::Tensor& tokens);
  /// Pooled representation [B, d] before the classifier.
  torch::Tensor encode(const torch::Tensor& tokens);

  const TransformerConfig& config() const noexcept { return config_; }
  int64_t token_count() const noexcept { return tokens_; }

  PatchEmbed patch_embed{nullptr};
  ConvTokenizer conv_tokenizer{nullptr};
  torch::Tensor cls_token;
  torch::Tensor pos_embed;
  torch::nn::ModuleList blocks{nullptr};
  SeqPool seq_pool{nullptr};
  torch::nn::LayerNorm norm{nullptr};
  torch::nn::Linear head{nullptr};

 private:
  void init_parameters(std::uint64_t seed);

  TransformerConfig config_;
  int64_t tokens_ = 0;
};
TORCH_MODULE(TransformerClassifier);

}  // namespace hybridvit::transformers
