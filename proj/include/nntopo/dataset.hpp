#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "nntopo/error.hpp"
#include "nntopo/tensor.hpp"

namespace nntopo {

/// Images (C x H x W, values in [0,1]) with integer class labels. `ids` are
/// stable per-item names used as artifact keys; they survive subsetting.
struct LabeledDataset {
  std::vector<Tensor> images;
  std::vector<int> labels;
  std::vector<std::string> ids;
  std::string name;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }

  int num_classes() const {
    int k = 0;
    for (int l : labels) k = std::max(k, l + 1);
    return k;
  }

  void push_back(Tensor image, int label, std::string id) {
    images.push_back(std::move(image));
    labels.push_back(label);
    ids.push_back(std::move(id));
  }

  void validate() const {
    if (labels.size() != images.size() || ids.size() != images.size())
      throw ConsistencyError("dataset '" + name + "': " +
                             std::to_string(images.size()) + " images, " +
                             std::to_string(labels.size()) + " labels, " +
                             std::to_string(ids.size()) + " ids");
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (labels[i] < 0)
        throw ConsistencyError("dataset '" + name + "': negative label at " +
                               std::to_string(i));
      for (double v : images[i].data)
        if (!(v >= 0.0 && v <= 1.0))
          throw ConsistencyError("dataset '" + name + "': pixel outside [0,1] in item " +
                                 std::to_string(i));
    }
  }

  LabeledDataset subset(const std::vector<std::size_t>& indices) const {
    LabeledDataset out;
    out.name = name;
    out.images.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(images[i], labels[i], ids[i]);
    return out;
  }
};

}  // namespace nntopo
