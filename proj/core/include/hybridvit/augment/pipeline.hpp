#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hybridvit/augment/transforms.hpp"

namespace hybridvit::augment {

/// Named, ordered list of transforms.
struct AugSpec {
  std::string name;
  std::vector<TransformDescriptor> transforms;
};

/// Names accepted by build_pipeline: self-supervised recipes first
/// (baseline, data_aug_1..5) then supervised ones (no_aug, aug_0..5).
const std::vector<std::string>& pipeline_names();

/// Builds one of the named recipes; ConfigError lists the valid names.
AugSpec build_pipeline(const std::string& name, int size = 96);

/// Which transforms fired during one `apply` call, in pipeline order.
struct ApplyTrace {
  std::vector<TransformKind> fired;
  bool fired_kind(TransformKind k) const;
};

/// Runs the pipeline. Each transform draws u ~ U[0,1) from `rng` and fires
/// iff u < probability; parameters are drawn only when it fires.
ImageTensor apply(const AugSpec& spec, const ImageTensor& image, RngStream& rng,
                  ApplyTrace* trace = nullptr);

/// Two independent draws of the same pipeline over one source image.
std::pair<ImageTensor, ImageTensor> two_views(const AugSpec& spec, const ImageTensor& image,
                                              RngStream& rng);

/// Custom pipelines from config:
/// `{"name": "...", "transforms": [{"kind": "hflip", "p": 0.5}, ...]}`.
AugSpec pipeline_from_json(const nlohmann::json& j);
nlohmann::json pipeline_to_json(const AugSpec& spec);

}  // namespace hybridvit::augment
