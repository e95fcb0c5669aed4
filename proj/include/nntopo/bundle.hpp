#pragma once

// Model bundle: <dir>/manifest.json (architecture, parameter shapes, seed and
// training metadata) plus <dir>/weights.bin, every parameter tensor in layer
// order (weight then bias), row-major little-endian float64.

#include <filesystem>
#include <string>

#include "json.hpp"

#include "nntopo/error.hpp"
#include "nntopo/graph.hpp"
#include "nntopo/nn.hpp"

namespace nntopo {

inline nlohmann::json layer_to_json(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> nlohmann::json {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Dense>) {
          return {{"type", "dense"}, {"in", l.in}, {"out", l.out}, {"activation", to_string(l.activation)}};
        } else if constexpr (std::is_same_v<T, Conv2d>) {
          return {{"type", "conv2d"},        {"in_channels", l.in_channels}, {"out_channels", l.out_channels},
                  {"kernel_h", l.kernel_h},  {"kernel_w", l.kernel_w},       {"stride", l.stride},
                  {"padding", l.padding},    {"activation", to_string(l.activation)}};
        } else if constexpr (std::is_same_v<T, MaxPool2d>) {
          return {{"type", "maxpool2d"}, {"kernel", l.kernel}, {"stride", l.stride}};
        } else {
          return {{"type", "flatten"}};
        }
      },
      layer);
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type");
  if (type == "dense")
    return Dense{j.at("in"), j.at("out"), parse_activation(j.at("activation"))};
  if (type == "conv2d")
    return Conv2d{j.at("in_channels"), j.at("out_channels"), j.at("kernel_h"), j.at("kernel_w"),
                  j.value("stride", std::size_t{1}), j.value("padding", std::size_t{0}),
                  parse_activation(j.at("activation"))};
  if (type == "maxpool2d") return MaxPool2d{j.at("kernel"), j.value("stride", std::size_t(j.at("kernel")))};
  if (type == "flatten") return Flatten{};
  throw FormatError("unknown layer type '" + type + "'");
}

inline nlohmann::json spec_to_json(const NetworkSpec& spec) {
  nlohmann::json j;
  j["input_shape"] = spec.input_shape;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : spec.layers) j["layers"].push_back(layer_to_json(l));
  return j;
}

inline NetworkSpec spec_from_json(const nlohmann::json& j) {
  try {
    NetworkSpec spec;
    spec.input_shape = j.at("input_shape").get<Shape>();
    for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
    spec.output_shapes();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network spec: ") + e.what());
  }
}

struct ModelBundle {
  NetworkSpec spec;
  NetworkWeights weights;
  nlohmann::json metadata = nlohmann::json::object();  // seed, training info, ...
};

inline std::string weights_bytes(const NetworkWeights& w) {
  std::string buf;
  buf.reserve(w.parameter_count() * 8);
  for (const auto& p : w.layers) {
    for (double v : p.weight.data) detail::put_le(buf, v);
    for (double v : p.bias.data) detail::put_le(buf, v);
  }
  return buf;
}

inline void save_bundle(const ModelBundle& b, const std::string& dir) {
  validate_weights(b.spec, b.weights);
  std::filesystem::create_directories(dir);
  nlohmann::json m;
  m["format"] = "nntopo-model/1";
  m["network"] = spec_to_json(b.spec);
  m["parameters"] = nlohmann::json::array();
  for (std::size_t l = 0; l < b.spec.layers.size(); ++l) {
    if (!is_parametric(b.spec.layers[l])) continue;
    m["parameters"].push_back({{"layer", l},
                               {"weight_shape", b.weights.layers[l].weight.shape},
                               {"bias_shape", b.weights.layers[l].bias.shape}});
  }
  m["parameter_count"] = b.weights.parameter_count();
  m["byte_count"] = b.weights.parameter_count() * 8;
  m["metadata"] = b.metadata;
  detail::dump(dir + "/manifest.json", m.dump(2) + "\n");
  detail::dump(dir + "/weights.bin", weights_bytes(b.weights));
}

inline ModelBundle load_bundle(const std::string& dir) {
  const std::string manifest_path = dir + "/manifest.json";
  const std::string weights_path = dir + "/weights.bin";
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(detail::slurp(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path + ": " + e.what());
  }
  ModelBundle b;
  b.spec = spec_from_json(m.at("network"));
  b.metadata = m.value("metadata", nlohmann::json::object());
  const std::string bytes = detail::slurp(weights_path);

  std::size_t expected = 0;
  for (const auto& l : b.spec.layers)
    expected += shape_size(expected_weight_shape(l)) * (is_parametric(l) ? 1 : 0) +
                shape_size(expected_bias_shape(l)) * (is_parametric(l) ? 1 : 0);
  if (m.value("byte_count", std::size_t{0}) != expected * 8 || bytes.size() != expected * 8)
    throw FormatError(weights_path + ": " + std::to_string(bytes.size()) + " bytes, manifest expects " +
                      std::to_string(expected * 8));

  detail::ByteReader r(bytes, weights_path);
  for (const auto& l : b.spec.layers) {
    LayerParams p;
    if (is_parametric(l)) {
      p.weight = Tensor(expected_weight_shape(l));
      p.bias = Tensor(expected_bias_shape(l));
      for (double& v : p.weight.data) v = r.get<double>();
      for (double& v : p.bias.data) v = r.get<double>();
    }
    b.weights.layers.push_back(std::move(p));
  }
  return b;
}

}  // namespace nntopo
