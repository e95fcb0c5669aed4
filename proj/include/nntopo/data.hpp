#pragma once

// IDX ingestion (MNIST / Fashion-MNIST distribution format), seeded splits
// and subsetting, and synthetic Gaussian-blob fixtures.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nntopo/dataset.hpp"
#include "nntopo/error.hpp"
#include "nntopo/tensor.hpp"

namespace nntopo {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t off,
                               const std::string& path) {
  if (off + 4 > buf.size()) throw FormatError("'" + path + "': truncated IDX header");
  return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
         (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

inline void put_be32(std::vector<unsigned char>& buf, std::uint32_t v) {
  buf.push_back(static_cast<unsigned char>(v >> 24));
  buf.push_back(static_cast<unsigned char>(v >> 16));
  buf.push_back(static_cast<unsigned char>(v >> 8));
  buf.push_back(static_cast<unsigned char>(v));
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& buf) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace detail

/// Reads an IDX image file (magic 0x803, dims N x H x W) and its label file
/// (magic 0x801, dim N). Pixels are scaled to [0,1] by 1/255 and stored as
/// 1 x H x W tensors. Item ids are "<name>-<index>".
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                               const std::string& name = "idx") {
  const auto img = detail::read_file(images_path);
  const auto lab = detail::read_file(labels_path);

  const std::uint32_t img_magic = detail::read_be32(img, 0, images_path);
  if (img_magic != kIdxImageMagic)
    throw FormatError("'" + images_path + "': bad IDX image magic");
  const std::uint32_t lab_magic = detail::read_be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelMagic)
    throw FormatError("'" + labels_path + "': bad IDX label magic");

  const std::size_t n = detail::read_be32(img, 4, images_path);
  const std::size_t h = detail::read_be32(img, 8, images_path);
  const std::size_t w = detail::read_be32(img, 12, images_path);
  const std::size_t n_labels = detail::read_be32(lab, 4, labels_path);
  if (n != n_labels)
    throw ConsistencyError("IDX count mismatch: " + std::to_string(n) + " images vs " +
                           std::to_string(n_labels) + " labels");
  if (img.size() != 16 + n * h * w)
    throw FormatError("'" + images_path + "': payload size does not match header");
  if (lab.size() != 8 + n) throw FormatError("'" + labels_path + "': payload size does not match header");

  LabeledDataset ds;
  ds.name = name;
  ds.images.reserve(n);
  const std::size_t digits = std::max<std::size_t>(5, std::to_string(n).size());
  for (std::size_t i = 0; i < n; ++i) {
    Tensor t({1, h, w});
    const unsigned char* px = &img[16 + i * h * w];
    for (std::size_t k = 0; k < h * w; ++k) t.data[k] = double(px[k]) / 255.0;
    std::string idx = std::to_string(i);
    ds.push_back(std::move(t), int(lab[8 + i]),
                 name + "-" + std::string(digits - idx.size(), '0') + idx);
  }
  return ds;
}

/// Writes 1 x H x W images (rounded to bytes) plus labels as an IDX pair.
inline void write_idx(const LabeledDataset& ds, const std::string& images_path,
                      const std::string& labels_path) {
  if (ds.empty()) throw UsageError("cannot write an empty dataset");
  const Shape& s = ds.images.front().shape;
  if (s.size() != 3 || s[0] != 1) throw UsageError("IDX export needs 1 x H x W images");
  std::vector<unsigned char> img, lab;
  detail::put_be32(img, kIdxImageMagic);
  detail::put_be32(img, std::uint32_t(ds.size()));
  detail::put_be32(img, std::uint32_t(s[1]));
  detail::put_be32(img, std::uint32_t(s[2]));
  detail::put_be32(lab, kIdxLabelMagic);
  detail::put_be32(lab, std::uint32_t(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.images[i].data)
      img.push_back(static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    lab.push_back(static_cast<unsigned char>(ds.labels[i]));
  }
  detail::write_file(images_path, img);
  detail::write_file(labels_path, lab);
}

inline std::map<int, std::size_t> class_counts(const LabeledDataset& ds) {
  std::map<int, std::size_t> counts;
  for (int l : ds.labels) ++counts[l];
  return counts;
}

/// Seeded shuffled partition into (train, test) with round(n * fraction)
/// training items.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                       double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw UsageError("train fraction must lie in (0, 1)");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = std::size_t(std::llround(double(ds.size()) * train_fraction));
  if (n_train == 0 || n_train == ds.size())
    throw UsageError("split leaves one side empty (" + std::to_string(ds.size()) + " items)");
  std::vector<std::size_t> tr(order.begin(), order.begin() + std::ptrdiff_t(n_train));
  std::vector<std::size_t> te(order.begin() + std::ptrdiff_t(n_train), order.end());
  auto train = ds.subset(tr);
  auto test = ds.subset(te);
  train.name = ds.name + "-train";
  test.name = ds.name + "-test";
  return {std::move(train), std::move(test)};
}

/// First `n` items after a seeded shuffle (all items if n >= size).
inline LabeledDataset take_first(const LabeledDataset& ds, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(std::min(n, order.size()));
  return ds.subset(order);
}

/// First `per_class` items of every class after a seeded shuffle, grouped by
/// class in ascending class order.
inline LabeledDataset take_per_class(const LabeledDataset& ds, std::size_t per_class,
                                     std::uint64_t seed) {
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i : order) {
    auto& bucket = by_class[ds.labels[i]];
    if (bucket.size() < per_class) bucket.push_back(i);
  }
  std::vector<std::size_t> picked;
  for (auto& [label, idx] : by_class) picked.insert(picked.end(), idx.begin(), idx.end());
  return ds.subset(picked);
}

/// Isotropic Gaussian blobs in [0,1]^dim, one per class. Centers are drawn
/// uniformly in [0.2, 0.8]^dim and then pushed apart along the first axis so
/// consecutive centers are `separation` standard deviations apart; the
/// standard deviation is chosen so all centers fit inside the cube.
inline LabeledDataset synthetic_blobs(std::size_t num_classes, std::size_t per_class,
                                      std::size_t dim, double separation, std::uint64_t seed) {
  if (num_classes == 0 || per_class == 0 || dim == 0 || !(separation > 0.0))
    throw UsageError("synthetic_blobs arguments must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.2, 0.8);
  // Spread along axis 0 covers [0.1, 0.9].
  const double sigma = num_classes > 1 ? 0.8 / (separation * double(num_classes - 1)) : 0.05;
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(dim));
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (double& v : centers[c]) v = unif(rng);
    centers[c][0] = num_classes > 1 ? 0.1 + 0.8 * double(c) / double(num_classes - 1) : 0.5;
  }
  std::normal_distribution<double> noise(0.0, sigma);
  LabeledDataset ds;
  ds.name = "blobs";
  std::size_t k = 0;
  for (std::size_t c = 0; c < num_classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      Tensor t({dim});
      for (std::size_t d = 0; d < dim; ++d)
        t.data[d] = std::clamp(centers[c][d] + noise(rng), 0.0, 1.0);
      ds.push_back(std::move(t), int(c), "blobs-" + std::to_string(k++));
    }
  return ds;
}

}  // namespace nntopo
