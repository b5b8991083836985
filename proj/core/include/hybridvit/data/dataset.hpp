#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridvit/data/image.hpp"

namespace hybridvit::data {

enum class Split { train, test, unlabeled };

std::string_view to_string(Split split);
Split parse_split(std::string_view name);
inline bool is_labeled(Split split) { return split != Split::unlabeled; }

/// Ordered, immutable-after-construction image collection.
///
/// Labels are present iff the split is labeled; label indices are 0-based
/// and index into `class_names`.
struct Dataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::vector<std::string> class_names;
  Split split = Split::train;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
  int num_classes() const noexcept { return static_cast<int>(class_names.size()); }
  bool labeled() const noexcept { return is_labeled(split); }

  /// Throws if the label/split invariants are violated.
  void validate() const;
};

/// Which part of a dataset to keep.
struct SubsetSpec {
  /// Original class indices to keep; empty keeps every class.
  std::vector<int> class_filter;
  /// Fraction of each class to keep, in (0, 1].
  double fraction = 1.0;
  std::uint64_t seed = 0;
};

/// Keeps `fraction` of every filtered class after a seeded per-class
/// shuffle. Kept classes are relabeled 0..k-1 in filter order; output order
/// follows the original index.
Dataset apply_subset(const Dataset& dataset, const SubsetSpec& spec);

/// Indices of `labels` split into (train, val) with `val_fraction` of every
/// class held out (stratified, seeded).
struct StratifiedSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};
StratifiedSplit stratified_split(std::span<const int> labels, int num_classes,
                                 double val_fraction, std::uint64_t seed);

Dataset select(const Dataset& dataset, std::span<const std::size_t> indices);

// ---- STL-10 binary format ------------------------------------------------

inline constexpr int kStl10Side = 96;
inline constexpr int kStl10Channels = 3;
inline constexpr std::size_t kStl10ImageBytes = 3 * 96 * 96;

/// Decodes one STL-10 record: three 96x96 channel planes, each stored
/// column-major, one unsigned octet per value.
ImageTensor decode_stl10_image(std::span<const std::uint8_t> bytes);

/// Inverse of decode_stl10_image for images with values k/255.
std::vector<std::uint8_t> encode_stl10_image(const ImageTensor& image);

struct Stl10Files {
  std::string train_images = "train_X.bin";
  std::string train_labels = "train_y.bin";
  std::string test_images = "test_X.bin";
  std::string test_labels = "test_y.bin";
  std::string unlabeled_images = "unlabeled_X.bin";
  std::string class_names = "class_names.txt";
};

/// The STL-10 class list in file order.
std::vector<std::string> stl10_default_class_names();

/// First `count` classes after sorting `class_names` alphabetically.
std::vector<int> default_class_filter(std::span<const std::string> class_names, int count = 5);

/// Loads an STL-10 split from `root` and applies `subset`.
///
/// The unlabeled split ignores `subset.class_filter` and only applies the
/// fraction.
Dataset load_stl10(const std::filesystem::path& root, Split split, const SubsetSpec& subset,
                   const Stl10Files& files = {});

/// Resolves the dataset root: explicit flag value first, then the
/// HYBRIDVIT_DATA_ROOT environment variable. Empty when neither is set.
std::filesystem::path resolve_data_root(const std::string& flag_value);

/// Procedural shape dataset standing in for STL-10 in tests.
///
/// Each class is a distinct shape family with its own two-tone fill texture,
/// drawn at random position, scale, rotation, texture period and colors over
/// a noisy gradient background; color carries no class information.
/// Deterministic given `seed`.
Dataset make_synthetic_dataset(int n, int n_classes, int hw, std::uint64_t seed,
                               Split split = Split::train);

/// Maximum class count supported by make_synthetic_dataset.
inline constexpr int kSyntheticMaxClasses = 10;

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
};

/// Per-channel population mean/std over all pixels of all images.
ChannelStats dataset_stats(const Dataset& dataset);

}  // namespace hybridvit::data
