#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "hybridvit/data/dataset.hpp"
#include "hybridvit/data/subset_detail.hpp"
#include "hybridvit/errors.hpp"

namespace hybridvit::data {

namespace {

constexpr std::size_t kPlane = static_cast<std::size_t>(kStl10Side) * kStl10Side;

std::uintmax_t checked_file_size(const std::filesystem::path& p) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(p, ec);
  if (ec) throw Error("cannot open '" + p.string() + "': " + ec.message());
  return size;
}

std::vector<int> read_labels(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open '" + p.string() + "'");
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  std::vector<int> labels;
  labels.reserve(raw.size());
  for (auto b : raw) {
    if (b == 0) throw MalformedRecord("STL-10 labels are 1-indexed; found 0 in " + p.string());
    labels.push_back(static_cast<int>(b) - 1);
  }
  return labels;
}

}  // namespace

ImageTensor decode_stl10_image(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kStl10ImageBytes) {
    throw MalformedRecord("STL-10 record must be " + std::to_string(kStl10ImageBytes) +
                          " bytes, got " + std::to_string(bytes.size()));
  }
  ImageTensor img(kStl10Channels, kStl10Side, kStl10Side);
  for (int ch = 0; ch < kStl10Channels; ++ch) {
    const auto* src = bytes.data() + ch * kPlane;
    for (int c = 0; c < kStl10Side; ++c) {
      for (int r = 0; r < kStl10Side; ++r) {
        img.at(ch, r, c) = static_cast<float>(src[c * kStl10Side + r]) / 255.0f;
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_stl10_image(const ImageTensor& image) {
  if (image.channels() != kStl10Channels || image.height() != kStl10Side ||
      image.width() != kStl10Side) {
    throw ShapeError("encode_stl10_image expects a 3x96x96 image");
  }
  std::vector<std::uint8_t> out(kStl10ImageBytes);
  for (int ch = 0; ch < kStl10Channels; ++ch) {
    for (int c = 0; c < kStl10Side; ++c) {
      for (int r = 0; r < kStl10Side; ++r) {
        const float v = std::clamp(image.at(ch, r, c), 0.0f, 1.0f);
        out[ch * kPlane + c * kStl10Side + r] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  return out;
}

std::vector<std::string> stl10_default_class_names() {
  return {"airplane", "bird", "car", "cat", "deer", "dog", "horse", "monkey", "ship", "truck"};
}

std::vector<int> default_class_filter(std::span<const std::string> class_names, int count) {
  std::vector<int> order(class_names.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return class_names[a] < class_names[b]; });
  order.resize(std::min<std::size_t>(order.size(), static_cast<std::size_t>(count)));
  return order;
}

Dataset load_stl10(const std::filesystem::path& root, Split split, const SubsetSpec& subset,
                   const Stl10Files& files) {
  std::filesystem::path image_path;
  std::filesystem::path label_path;
  switch (split) {
    case Split::train:
      image_path = root / files.train_images;
      label_path = root / files.train_labels;
      break;
    case Split::test:
      image_path = root / files.test_images;
      label_path = root / files.test_labels;
      break;
    case Split::unlabeled:
      image_path = root / files.unlabeled_images;
      break;
  }

  const auto bytes = checked_file_size(image_path);
  if (bytes % kStl10ImageBytes != 0) {
    throw MalformedRecord("'" + image_path.string() + "' is not a whole number of records");
  }
  const auto count = static_cast<std::size_t>(bytes / kStl10ImageBytes);

  std::vector<int> labels;
  if (is_labeled(split)) {
    labels = read_labels(label_path);
    if (labels.size() != count) {
      throw MalformedRecord("size mismatch: " + std::to_string(count) + " images but " +
                            std::to_string(labels.size()) + " labels");
    }
  }

  std::vector<std::string> names = stl10_default_class_names();
  if (std::ifstream cn(root / files.class_names); cn) {
    std::vector<std::string> read;
    for (std::string line; std::getline(cn, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) read.push_back(line);
    }
    if (!read.empty()) names = std::move(read);
  }
  for (int l : labels) {
    if (l >= static_cast<int>(names.size())) throw MalformedRecord("label exceeds class count");
  }

  auto sel = detail::select_subset(labels, count, is_labeled(split), subset);

  std::ifstream in(image_path, std::ios::binary);
  if (!in) throw Error("cannot open '" + image_path.string() + "'");
  Dataset out;
  out.split = split;
  out.images.reserve(sel.indices.size());
  std::vector<std::uint8_t> record(kStl10ImageBytes);
  for (auto idx : sel.indices) {
    in.seekg(static_cast<std::streamoff>(idx * kStl10ImageBytes));
    in.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(record.size()));
    if (!in) throw MalformedRecord("short read in '" + image_path.string() + "'");
    auto img = decode_stl10_image(record);
    img.provenance = "stl10:" + image_path.filename().string() + "#" + std::to_string(idx);
    out.images.push_back(std::move(img));
  }
  if (is_labeled(split)) {
    out.labels = std::move(sel.labels);
    out.class_names = detail::remap_class_names(names, sel.remap);
  } else {
    out.class_names = names;
  }
  return out;
}

std::filesystem::path resolve_data_root(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("HYBRIDVIT_DATA_ROOT"); env && *env) return env;
  return {};
}

}  // namespace hybridvit::data
