#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hybridvit/data/dataset.hpp"
#include "hybridvit/data/subset_detail.hpp"
#include "hybridvit/errors.hpp"
#include "hybridvit/rng.hpp"

namespace hybridvit::data {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::test:
      return "test";
    case Split::unlabeled:
      return "unlabeled";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  if (name == "unlabeled") return Split::unlabeled;
  throw ConfigError("unknown split '" + std::string(name) + "' (valid: train, test, unlabeled)");
}

void Dataset::validate() const {
  if (labeled()) {
    if (labels.size() != images.size()) {
      throw Error("dataset: labeled split needs one label per image");
    }
    for (int l : labels) {
      if (l < 0 || l >= num_classes()) throw Error("dataset: label index out of range");
    }
  } else if (!labels.empty()) {
    throw Error("dataset: unlabeled split must not carry labels");
  }
}

namespace detail {

void seeded_shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

std::size_t keep_count(std::size_t n, double fraction) {
  if (n == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

SubsetSelection select_subset(std::span<const int> labels, std::size_t count, bool labeled,
                              const SubsetSpec& spec) {
  if (!(spec.fraction > 0.0 && spec.fraction <= 1.0)) {
    throw ConfigError("subset fraction must be in (0, 1]");
  }
  RngStream rng(spec.seed);
  SubsetSelection out;
  if (!labeled) {
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    seeded_shuffle(idx, rng);
    idx.resize(keep_count(count, spec.fraction));
    std::sort(idx.begin(), idx.end());
    out.indices = std::move(idx);
    return out;
  }

  // old class index -> new contiguous index, in filter order
  std::map<int, int> remap;
  if (spec.class_filter.empty()) {
    int max_label = -1;
    for (int l : labels) max_label = std::max(max_label, l);
    for (int c = 0; c <= max_label; ++c) remap[c] = c;
  } else {
    int next = 0;
    for (int c : spec.class_filter) {
      if (c < 0) throw ConfigError("class filter entries must be non-negative");
      if (!remap.contains(c)) remap[c] = next++;
    }
  }

  std::map<int, std::vector<std::size_t>> per_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (remap.contains(labels[i])) per_class[labels[i]].push_back(i);
  }
  std::vector<std::size_t> kept;
  for (auto& [cls, members] : per_class) {
    seeded_shuffle(members, rng);
    members.resize(keep_count(members.size(), spec.fraction));
    kept.insert(kept.end(), members.begin(), members.end());
  }
  std::sort(kept.begin(), kept.end());
  out.labels.reserve(kept.size());
  for (auto i : kept) out.labels.push_back(remap.at(labels[i]));
  out.indices = std::move(kept);
  out.remap = std::move(remap);
  return out;
}

std::vector<std::string> remap_class_names(std::span<const std::string> names,
                                           const std::map<int, int>& remap) {
  std::vector<std::string> out(remap.size());
  for (const auto& [old_idx, new_idx] : remap) {
    out[new_idx] = old_idx < static_cast<int>(names.size()) ? names[old_idx]
                                                            : "class" + std::to_string(old_idx);
  }
  return out;
}

}  // namespace detail

Dataset apply_subset(const Dataset& dataset, const SubsetSpec& spec) {
  dataset.validate();
  auto sel = detail::select_subset(dataset.labels, dataset.size(), dataset.labeled(), spec);
  Dataset out;
  out.split = dataset.split;
  out.images.reserve(sel.indices.size());
  for (auto i : sel.indices) out.images.push_back(dataset.images[i]);
  if (dataset.labeled()) {
    out.labels = std::move(sel.labels);
    out.class_names = detail::remap_class_names(dataset.class_names, sel.remap);
  } else {
    out.class_names = dataset.class_names;
  }
  return out;
}

StratifiedSplit stratified_split(std::span<const int> labels, int num_classes,
                                 double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("validation fraction must be in [0, 1)");
  }
  StratifiedSplit out;
  RngStream rng = RngStream::derive(seed, {0x7661ULL});
  std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) per_class.at(labels[i]).push_back(i);
  for (auto& members : per_class) {
    detail::seeded_shuffle(members, rng);
    std::size_t n_val = 0;
    if (val_fraction > 0.0 && members.size() > 1) {
      n_val = std::min(members.size() - 1, detail::keep_count(members.size(), val_fraction));
    }
    out.val.insert(out.val.end(), members.begin(), members.begin() + static_cast<long>(n_val));
    out.train.insert(out.train.end(), members.begin() + static_cast<long>(n_val), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  return out;
}

Dataset select(const Dataset& dataset, std::span<const std::size_t> indices) {
  Dataset out;
  out.split = dataset.split;
  out.class_names = dataset.class_names;
  out.images.reserve(indices.size());
  for (auto i : indices) {
    out.images.push_back(dataset.images.at(i));
    if (dataset.labeled()) out.labels.push_back(dataset.labels.at(i));
  }
  return out;
}

}  // namespace hybridvit::data
