#include "hybridvit/augment/pipeline.hpp"

#include <algorithm>

#include "hybridvit/errors.hpp"

namespace hybridvit::augment {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

TransformDescriptor td(TransformOp op, double p = 1.0) { return {std::move(op), p}; }

// Shared tail of data_aug_1..5: everything after the resized crop.
std::vector<TransformDescriptor> modified_tail() {
  return {
      td(ColorJitter{0.4, 0.4, 0.4, 0.1}, 0.8),
      td(HorizontalFlip{}, 0.5),
      td(Grayscale{}, 0.2),
      td(GaussianBlur{}, 0.5),
      td(Solarize{}, 0.2),
  };
}

AugSpec data_aug(const std::string& name, int size, std::vector<TransformDescriptor> head, bool normalize) {
  AugSpec spec{name, std::move(head)};
  spec.transforms.push_back(td(ResizedCrop{size}));
  for (auto& t : modified_tail()) spec.transforms.push_back(t);
  if (normalize) spec.transforms.push_back(td(Normalize{}));
  return spec;
}

}  // namespace

const std::vector<std::string>& pipeline_names() {
  static const std::vector<std::string> names{
      "baseline", "data_aug_1", "data_aug_2", "data_aug_3", "data_aug_4", "data_aug_5",
      "no_aug",   "aug_0",      "aug_1",      "aug_2",      "aug_3",      "aug_4",
      "aug_5"};
  return names;
}

AugSpec build_pipeline(const std::string& name, int size) {
  // self-supervised recipes
  if (name == "baseline") {
    return {name,
            {td(ResizedCrop{size}), td(ColorJitter{0.8, 0.8, 0.8, 0.2}, 0.8),
             td(HorizontalFlip{}, 0.5), td(Grayscale{}, 0.2), td(GaussianBlur{}, 0.2),
             td(Normalize{})}};
  }
  if (name == "data_aug_1") return data_aug(name, size, {}, true);
  if (name == "data_aug_2") return data_aug(name, size, {td(Rotation{15})}, true);
  if (name == "data_aug_3") return data_aug(name, size, {td(Cutout{1, 8}, 0.5)}, true);
  if (name == "data_aug_4") return data_aug(name, size, {td(Rotation{15}), td(Cutout{1, 8}, 0.5)}, true);
  if (name == "data_aug_5") return data_aug(name, size, {}, false);

  // supervised recipes
  const ResizedCrop wide_crop{size, 0.05, 1.0};
  if (name == "no_aug") return {name, {}};
  if (name == "aug_0") return {name, {td(Resize{size, size}), td(wide_crop)}};
  if (name == "aug_1") return {name, {td(Resize{size, size}), td(wide_crop), td(Rotation{15})}};
  if (name == "aug_2") {
    return {name,
            {td(Resize{size, size}), td(wide_crop), td(Rotation{15}), td(GaussianBlur{}, 0.2)}};
  }
  if (name == "aug_3") return {name, {td(PaddedCrop{size, 4}), td(HorizontalFlip{}, 0.5)}};
  if (name == "aug_4") {
    return {name, {td(PaddedCrop{size, 4}), td(HorizontalFlip{}, 0.5), td(GaussianBlur{}, 0.2)}};
  }
  if (name == "aug_5") {
    return {name,
            {td(PaddedCrop{size, 4}), td(HorizontalFlip{}, 0.5), td(GaussianBlur{}, 0.2),
             td(Rotation{15})}};
  }

  std::string valid;
  for (const auto& n : pipeline_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown augmentation '" + name + "' (valid: " + valid + ")");
}

bool ApplyTrace::fired_kind(TransformKind k) const {
  return std::find(fired.begin(), fired.end(), k) != fired.end();
}

ImageTensor apply(const AugSpec& spec, const ImageTensor& image, RngStream& rng,
                  ApplyTrace* trace) {
  ImageTensor out = image;
  for (const auto& t : spec.transforms) {
    const double u = rng.uniform();
    if (u < t.probability) {
      out = apply_op(t.op, out, rng);
      if (trace) trace->fired.push_back(t.kind());
    }
  }
  return out;
}

std::pair<ImageTensor, ImageTensor> two_views(const AugSpec& spec, const ImageTensor& image,
                                              RngStream& rng) {
  auto a = apply(spec, image, rng);
  auto b = apply(spec, image, rng);
  return {std::move(a), std::move(b)};
}

AugSpec pipeline_from_json(const nlohmann::json& j) {
  AugSpec spec;
  spec.name = j.value("name", std::string("custom"));
  if (!j.contains("transforms") || !j["transforms"].is_array()) {
    throw ConfigError("custom pipeline needs a 'transforms' array");
  }
  for (const auto& e : j["transforms"]) {
    const auto kind = parse_transform_kind(e.at("kind").get<std::string>());
    TransformDescriptor d{HorizontalFlip{}, e.value("p", 1.0)};
    switch (kind) {
      case TransformKind::resized_crop: {
        ResizedCrop v;
        v.size = e.value("size", v.size);
        v.scale_lo = e.value("scale_lo", v.scale_lo);
        v.scale_hi = e.value("scale_hi", v.scale_hi);
        v.ratio_lo = e.value("ratio_lo", v.ratio_lo);
        v.ratio_hi = e.value("ratio_hi", v.ratio_hi);
        d.op = v;
        break;
      }
      case TransformKind::color_jitter: {
        ColorJitter v;
        v.brightness = e.value("brightness", v.brightness);
        v.contrast = e.value("contrast", v.contrast);
        v.saturation = e.value("saturation", v.saturation);
        v.hue = e.value("hue", v.hue);
        d.op = v;
        break;
      }
      case TransformKind::hflip: d.op = HorizontalFlip{}; break;
      case TransformKind::grayscale: d.op = Grayscale{}; break;
      case TransformKind::gaussian_blur: {
        GaussianBlur v;
        v.sigma_lo = e.value("sigma_lo", v.sigma_lo);
        v.sigma_hi = e.value("sigma_hi", v.sigma_hi);
        d.op = v;
        break;
      }
      case TransformKind::solarize: d.op = Solarize{e.value("threshold", 0.5)}; break;
      case TransformKind::cutout: d.op = Cutout{e.value("holes", 1), e.value("length", 8)}; break;
      case TransformKind::rotation: d.op = Rotation{e.value("degrees", 15.0)}; break;
      case TransformKind::normalize: {
        Normalize v;
        if (e.contains("mean")) v.constants.mean = e["mean"].get<std::array<float, 3>>();
        if (e.contains("std")) v.constants.std = e["std"].get<std::array<float, 3>>();
        d.op = v;
        break;
      }
      case TransformKind::center_crop: d.op = CenterCrop{e.value("size", 96)}; break;
      case TransformKind::resize: d.op = Resize{e.value("height", 96), e.value("width", 96)}; break;
      case TransformKind::padded_crop:
        d.op = PaddedCrop{e.value("size", 96), e.value("padding", 4)};
        break;
    }
    d.validate();
    spec.transforms.push_back(std::move(d));
  }
  return spec;
}

nlohmann::json pipeline_to_json(const AugSpec& spec) {
  nlohmann::json out{{"name", spec.name}, {"transforms", nlohmann::json::array()}};
  for (const auto& t : spec.transforms) {
    nlohmann::json e{{"kind", std::string(to_string(t.kind()))}, {"p", t.probability}};
    std::visit(Overloaded{
                   [&](const ResizedCrop& v) {
                     e["size"] = v.size;
                     e["scale_lo"] = v.scale_lo;
                     e["scale_hi"] = v.scale_hi;
                     e["ratio_lo"] = v.ratio_lo;
                     e["ratio_hi"] = v.ratio_hi;
                   },
                   [&](const ColorJitter& v) {
                     e["brightness"] = v.brightness;
                     e["contrast"] = v.contrast;
                     e["saturation"] = v.saturation;
                     e["hue"] = v.hue;
                   },
                   [&](const GaussianBlur& v) {
                     e["sigma_lo"] = v.sigma_lo;
                     e["sigma_hi"] = v.sigma_hi;
                   },
                   [&](const Solarize& v) { e["threshold"] = v.threshold; },
                   [&](const Cutout& v) {
                     e["holes"] = v.holes;
                     e["length"] = v.length;
                   },
                   [&](const Rotation& v) { e["degrees"] = v.degrees; },
                   [&](const Normalize& v) {
                     e["mean"] = v.constants.mean;
                     e["std"] = v.constants.std;
                   },
                   [&](const CenterCrop& v) { e["size"] = v.size; },
                   [&](const Resize& v) {
                     e["height"] = v.height;
                     e["width"] = v.width;
                   },
                   [&](const PaddedCrop& v) {
                     e["size"] = v.size;
                     e["padding"] = v.padding;
                   },
                   [](const auto&) {},
               },
               t.op);
    out["transforms"].push_back(std::move(e));
  }
  return out;
}

}  // namespace hybridvit::augment
