#include "hybridvit/transformers/classifier.hpp"

#include <charconv>
#include <cmath>

#include "hybridvit/errors.hpp"
#include "hybridvit/nn/layers.hpp"

namespace hybridvit::transformers {

void TransformerConfig::validate() const {
  if (depth < 1) throw ConfigError("transformer depth must be >= 1");
  if (heads < 1 || dim < 1 || dim % heads != 0) {
    throw ConfigError("embed dim " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  if (mlp_ratio <= 0.0) throw ConfigError("mlp_ratio must be positive");
  if (tokenizer == TokenizerKind::patchify && patch < 1) throw ConfigError("patch size must be >= 1");
  if (num_classes < 1) throw ConfigError("num_classes must be >= 1");
  if (in_channels < 1 || in_height < 1 || in_width < 1) throw ConfigError("input shape must be positive");
}

nlohmann::json to_json(const TransformerConfig& c) {
  return {{"depth", c.depth},
          {"heads", c.heads},
          {"dim", c.dim},
          {"mlp_ratio", c.mlp_ratio},
          {"head_kind", c.head_kind == HeadKind::class_token ? "class_token" : "seq_pool"},
          {"tokenizer", c.tokenizer == TokenizerKind::patchify ? "patchify" : "conv"},
          {"patch", c.patch},
          {"conv",
           {{"layers", c.conv.layers},
            {"kernel", c.conv.kernel},
            {"stride", c.conv.stride},
            {"pool_kernel", c.conv.pool_kernel},
            {"pool_stride", c.conv.pool_stride},
            {"hidden_channels", c.conv.hidden_channels}}},
          {"num_classes", c.num_classes},
          {"in_channels", c.in_channels},
          {"in_height", c.in_height},
          {"in_width", c.in_width}};
}

TransformerConfig transformer_config_from_json(const nlohmann::json& j) {
  TransformerConfig c;
  try {
    c.depth = j.at("depth").get<int64_t>();
    c.heads = j.at("heads").get<int64_t>();
    c.dim = j.at("dim").get<int64_t>();
    c.mlp_ratio = j.at("mlp_ratio").get<double>();
    const auto head = j.at("head_kind").get<std::string>();
    if (head != "class_token" && head != "seq_pool") throw ConfigError("unknown head_kind '" + head + "'");
    c.head_kind = head == "class_token" ? HeadKind::class_token : HeadKind::seq_pool;
    const auto tok = j.at("tokenizer").get<std::string>();
    if (tok != "patchify" && tok != "conv") throw ConfigError("unknown tokenizer '" + tok + "'");
    c.tokenizer = tok == "patchify" ? TokenizerKind::patchify : TokenizerKind::conv;
    c.patch = j.at("patch").get<int64_t>();
    const auto& conv = j.at("conv");
    c.conv.layers = conv.at("layers").get<int>();
    c.conv.kernel = conv.at("kernel").get<int>();
    c.conv.stride = conv.at("stride").get<int>();
    c.conv.pool_kernel = conv.at("pool_kernel").get<int>();
    c.conv.pool_stride = conv.at("pool_stride").get<int>();
    c.conv.hidden_channels = conv.at("hidden_channels").get<int64_t>();
    c.num_classes = j.at("num_classes").get<int64_t>();
    c.in_channels = j.at("in_channels").get<int64_t>();
    c.in_height = j.at("in_height").get<int64_t>();
    c.in_width = j.at("in_width").get<int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("transformer config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

int64_t parse_int(std::string_view s, std::string_view whole) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("cannot parse model name '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

TransformerConfig config_from_name(std::string_view name, TransformerConfig base) {
  auto c = base;
  if (name.starts_with("ViT") || name.starts_with("CVT")) {
    const bool cvt = name.starts_with("CVT");
    c.head_kind = cvt ? HeadKind::seq_pool : HeadKind::class_token;
    c.tokenizer = TokenizerKind::patchify;
    auto rest = name.substr(3);
    if (!rest.empty()) {
      if (rest.front() != '-') throw ConfigError("cannot parse model name '" + std::string(name) + "'");
      rest.remove_prefix(1);
      const auto slash = rest.find('/');
      if (slash == std::string_view::npos) throw ConfigError("cannot parse model name '" + std::string(name) + "'");
      c.depth = parse_int(rest.substr(0, slash), name);
      c.patch = parse_int(rest.substr(slash + 1), name);
    } else if (cvt) {
      throw ConfigError("CVT names need the form CVT-L/p, got '" + std::string(name) + "'");
    }
  } else if (name.starts_with("CCT")) {
    c.head_kind = HeadKind::seq_pool;
    c.tokenizer = TokenizerKind::conv;
    auto rest = name.substr(3);
    const auto slash = rest.find('/');
    const auto x = rest.find('x', slash == std::string_view::npos ? 0 : slash);
    if (slash == std::string_view::npos || x == std::string_view::npos) {
      throw ConfigError("CCT names need the form CCTL/kxc, got '" + std::string(name) + "'");
    }
    c.depth = parse_int(rest.substr(0, slash), name);
    c.conv.kernel = static_cast<int>(parse_int(rest.substr(slash + 1, x - slash - 1), name));
    c.conv.layers = static_cast<int>(parse_int(rest.substr(x + 1), name));
  } else {
    throw ConfigError("unknown model name '" + std::string(name) + "' (expected ViT, CVT-L/p or CCTL/kxc)");
  }
  c.validate();
  return c;
}

TransformerClassifierImpl::TransformerClassifierImpl(TransformerConfig config, std::uint64_t init_seed)
    : config_(config) {
  config.validate();
  if (config.tokenizer == TokenizerKind::patchify) {
    patch_embed = register_module("patch_embed", PatchEmbed(config.in_channels, config.patch, config.dim));
    tokens_ = patch_embed->token_count(config.in_height, config.in_width);
  } else {
    conv_tokenizer = register_module("conv_tokenizer", ConvTokenizer(config.in_channels, config.dim, config.conv));
    tokens_ = conv_tokenizer->token_count(config.in_height, config.in_width);
  }
  if (config.has_class_token()) {
    cls_token = register_parameter("cls_token", torch::zeros({1, 1, config.dim}));
    pos_embed = register_parameter("pos_embed", torch::zeros({1, tokens_ + 1, config.dim}));
  }
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int64_t i = 0; i < config.depth; ++i) {
    blocks->push_back(EncoderBlock(config.dim, config.heads, config.mlp_ratio));
  }
  if (!config.has_class_token()) seq_pool = register_module("seq_pool", SeqPool(config.dim));
  norm = register_module("norm", torch::nn::LayerNorm(torch::nn::LayerNormOptions({config.dim})));
  head = register_module("head", torch::nn::Linear(config.dim, config.num_classes));
  init_parameters(init_seed);
}

void TransformerClassifierImpl::init_parameters(std::uint64_t seed) {
  auto gen = nn::make_generator(seed);
  torch::NoGradGuard guard;
  for (auto& m : modules(/*include_self=*/false)) {
    if (auto* lin = m->as<torch::nn::Linear>()) {
      nn::normal_(lin->weight, 0.02, gen);
      if (lin->bias.defined()) lin->bias.zero_();
    } else if (auto* conv = m->as<torch::nn::Conv2d>()) {
      nn::kaiming_normal_fan_out(conv->weight, gen);
    }
  }
  // Fan-in scaling keeps token content above the positional table when the
  // input is a low-magnitude feature map rather than pixels.
  if (patch_embed) {
    auto& w = patch_embed->proj->weight;
    nn::normal_(w, 1.0 / std::sqrt(static_cast<double>(w.size(1))), gen);
  }
  if (cls_token.defined()) {
    nn::normal_(cls_token, 0.02, gen);
    nn::normal_(pos_embed, 0.02, gen);
  }
}

torch::Tensor TransformerClassifierImpl::tokenize(const torch::Tensor& input) {
  if (input.dim() != 4 || input.size(1) != config_.in_channels || input.size(2) != config_.in_height ||
      input.size(3) != config_.in_width) {
    throw ShapeError("transformer expects [B, " + std::to_string(config_.in_channels) + ", " +
                     std::to_string(config_.in_height) + ", " + std::to_string(config_.in_width) +
                     "] input, got " + c10::str(input.sizes()));
  }
  return patch_embed ? patch_embed->forward(input) : conv_tokenizer->forward(input);
}

torch::Tensor TransformerClassifierImpl::encode(const torch::Tensor& tokens) {
  if (tokens.dim() != 3 || tokens.size(2) != config_.dim) throw ShapeError("tokens must be [B, N, dim]");
  auto x = tokens;
  if (config_.has_class_token()) {
    if (tokens.size(1) != tokens_) {
      throw ShapeError("positional table holds " + std::to_string(tokens_) + " tokens, got " +
                       std::to_string(tokens.size(1)));
    }
    x = torch::cat({cls_token.expand({x.size(0), 1, config_.dim}), x}, 1) + pos_embed;
  }
  for (const auto& b : *blocks) x = b->as<EncoderBlock>()->forward(x);
  x = norm->forward(x);
  return config_.has_class_token() ? x.select(1, 0) : seq_pool->forward(x);
}

torch::Tensor TransformerClassifierImpl::forward_tokens(const torch::Tensor& tokens) {
  return head->forward(encode(tokens));
}

torch::Tensor TransformerClassifierImpl::forward(const torch::Tensor& input) {
  return forward_tokens(tokenize(input));
}

}  // namespace hybridvit::transformers
