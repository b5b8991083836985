#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hybridvit/data/dataset.hpp"
#include "hybridvit/rng.hpp"

namespace hybridvit::data::detail {

struct SubsetSelection {
  std::vector<std::size_t> indices;  // ascending source indices
  std::vector<int> labels;           // remapped, parallel to indices
  std::map<int, int> remap;          // source class -> kept class
};

void seeded_shuffle(std::vector<std::size_t>& v, RngStream& rng);
std::size_t keep_count(std::size_t n, double fraction);
SubsetSelection select_subset(std::span<const int> labels, std::size_t count, bool labeled,
                              const SubsetSpec& spec);
std::vector<std::string> remap_class_names(std::span<const std::string> names,
                                           const std::map<int, int>& remap);

}  // namespace hybridvit::data::detail
