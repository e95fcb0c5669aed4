#pragma once

// Input-induced activation graph. Every Dense/Conv2d/MaxPool2d layer adds a
// node layer; Flatten is a pure reindexing and adds nothing. Nodes inside a
// layer are numbered channel-major, row-major (the same order Flatten uses),
// so graph layer 0 is the input image and the last graph layer holds the
// output nodes.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "nntopo/error.hpp"
#include "nntopo/nn.hpp"
#include "nntopo/tensor.hpp"

namespace nntopo {

struct NodeId {
  std::uint32_t layer = 0;
  std::uint32_t index = 0;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct InducedEdge {
  NodeId source;
  NodeId target;
  double contribution = 0.0;  // w_{u->v} * h_u
  double phi = 0.0;           // |contribution|
  friend bool operator==(const InducedEdge&, const InducedEdge&) = default;
};

struct InducedGraph {
  std::vector<std::size_t> nodes_per_layer;
  std::vector<InducedEdge> edges;
  std::string input_id;

  std::size_t node_count() const {
    std::size_t n = 0;
    for (auto s : nodes_per_layer) n += s;
    return n;
  }

  /// Offset of each layer in a global 0..node_count() vertex numbering.
  std::vector<std::size_t> layer_offsets() const {
    std::vector<std::size_t> off(nodes_per_layer.size() + 1, 0);
    for (std::size_t l = 0; l < nodes_per_layer.size(); ++l) off[l + 1] = off[l] + nodes_per_layer[l];
    return off;
  }

  friend bool operator==(const InducedGraph&, const InducedGraph&) = default;
};

enum class MaxPoolEdges {
  argmax,  // one edge per output node, from the winning input node
  window,  // one edge from every window node, carrying that node's activation
};

struct GraphOptions {
  MaxPoolEdges max_pool = MaxPoolEdges::argmax;
  double epsilon = 0.0;  // edges with phi <= epsilon are dropped
};

/// Index of the graph layer produced by each spec layer (-1 for Flatten).
inline std::vector<int> graph_layer_map(const NetworkSpec& spec) {
  std::vector<int> map;
  int g = 0;
  for (const auto& layer : spec.layers) map.push_back(std::holds_alternative<Flatten>(layer) ? -1 : ++g);
  return map;
}

/// Builds G^I for the input that produced `rec`. Edge contributions are
/// weight * post-activation of the source node (raw pixel on layer 0);
/// biases add no edges. Edges with phi <= options.epsilon are dropped.
inline InducedGraph build_induced_graph(const NetworkSpec& spec, const NetworkWeights& weights,
                                        const ActivationRecord& rec,
                                        const GraphOptions& options = {}) {
  const auto shapes = spec.output_shapes();
  validate_weights(spec, weights);
  if (rec.pre_activation.size() != spec.layers.size() ||
      rec.post_activation.size() != spec.layers.size() || rec.input.shape != spec.input_shape)
    throw ConsistencyError("activation record does not belong to this network");
  for (std::size_t l = 0; l < spec.layers.size(); ++l)
    if (rec.post_activation[l].shape != shapes[l])
      throw ConsistencyError("activation record layer " + std::to_string(l) +
                             " has shape " + shape_string(rec.post_activation[l].shape) +
                             ", expected " + shape_string(shapes[l]));

  InducedGraph g;
  g.nodes_per_layer.push_back(rec.input.size());
  const double eps = options.epsilon;

  auto emit = [&](std::uint32_t src_layer, std::size_t u, std::size_t v, double contribution) {
    const double phi = std::fabs(contribution);
    if (!(phi > eps)) return;
    g.edges.push_back({{src_layer, std::uint32_t(u)}, {src_layer + 1, std::uint32_t(v)},
                       contribution, phi});
  };

  const Tensor* values = &rec.input;  // h of the current source layer
  std::uint32_t src_layer = 0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerParams& p = weights.layers[l];
    bool adds_layer = true;
    std::visit(
        [&](const auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, Dense>) {
            for (std::size_t u = 0; u < layer.in; ++u) {
              const double h = values->data[u];
              if (h == 0.0) continue;
              for (std::size_t v = 0; v < layer.out; ++v)
                emit(src_layer, u, v, p.weight.data[v * layer.in + u] * h);
            }
          } else if constexpr (std::is_same_v<T, Conv2d>) {
            // Unrolled convolution: one edge per (output position, input
            // channel, kernel offset) that lands inside the unpadded input.
            const std::size_t H = values->shape[1], W = values->shape[2];
            const Shape& os = shapes[l];
            for (std::size_t oc = 0; oc < layer.out_channels; ++oc)
              for (std::size_t oy = 0; oy < os[1]; ++oy)
                for (std::size_t ox = 0; ox < os[2]; ++ox) {
                  const std::size_t v = (oc * os[1] + oy) * os[2] + ox;
                  for (std::size_t ic = 0; ic < layer.in_channels; ++ic)
                    for (std::size_t ky = 0; ky < layer.kernel_h; ++ky) {
                      const std::ptrdiff_t y =
                          std::ptrdiff_t(oy * layer.stride + ky) - std::ptrdiff_t(layer.padding);
                      if (y < 0 || y >= std::ptrdiff_t(H)) continue;
                      for (std::size_t kx = 0; kx < layer.kernel_w; ++kx) {
                        const std::ptrdiff_t x =
                            std::ptrdiff_t(ox * layer.stride + kx) - std::ptrdiff_t(layer.padding);
                        if (x < 0 || x >= std::ptrdiff_t(W)) continue;
                        const std::size_t u = (ic * H + std::size_t(y)) * W + std::size_t(x);
                        const double h = values->data[u];
                        if (h == 0.0) continue;
                        const double w =
                            p.weight.data[((oc * layer.in_channels + ic) * layer.kernel_h + ky) *
                                              layer.kernel_w + kx];
                        emit(src_layer, u, v, w * h);
                      }
                    }
                }
          } else if constexpr (std::is_same_v<T, MaxPool2d>) {
            const auto& arg = rec.argmax[l];
            if (arg.size() != rec.post_activation[l].size())
              throw ConsistencyError("missing max-pool argmax indices for layer " + std::to_string(l));
            if (options.max_pool == MaxPoolEdges::argmax) {
              for (std::size_t v = 0; v < arg.size(); ++v) emit(src_layer, arg[v], v, values->data[arg[v]]);
            } else {
              const std::size_t H = values->shape[1], W = values->shape[2];
              const Shape& os = shapes[l];
              for (std::size_t ch = 0; ch < os[0]; ++ch)
                for (std::size_t oy = 0; oy < os[1]; ++oy)
                  for (std::size_t ox = 0; ox < os[2]; ++ox) {
                    const std::size_t v = (ch * os[1] + oy) * os[2] + ox;
                    for (std::size_t ky = 0; ky < layer.kernel; ++ky)
                      for (std::size_t kx = 0; kx < layer.kernel; ++kx) {
                        const std::size_t u =
                            (ch * H + oy * layer.stride + ky) * W + ox * layer.stride + kx;
                        emit(src_layer, u, v, values->data[u]);
                      }
                  }
            }
          } else {
            adds_layer = false;
          }
        },
        spec.layers[l]);
    if (adds_layer) {
      g.nodes_per_layer.push_back(rec.post_activation[l].size());
      ++src_layer;
    }
    values = &rec.post_activation[l];
  }
  return g;
}

struct EquivalenceReport {
  /// Max |sum of incoming contributions + bias - pre_activation| per graph
  /// layer that comes from a Dense/Conv2d layer (pooling layers are skipped).
  std::vector<std::pair<std::size_t, double>> max_deviation;
  double worst = 0.0;
};

/// Checks that summing a node's incoming edge contributions plus its bias
/// reproduces the recorded pre-activation. Throws ValidationError naming the
/// first node whose deviation exceeds `tolerance`.
inline EquivalenceReport verify_forward_equivalence(const NetworkSpec& spec,
                                                    const NetworkWeights& weights,
                                                    const InducedGraph& graph,
                                                    const ActivationRecord& rec,
                                                    double tolerance = 1e-9) {
  const auto gmap = graph_layer_map(spec);
  std::vector<std::vector<double>> sums(graph.nodes_per_layer.size());
  for (std::size_t l = 0; l < graph.nodes_per_layer.size(); ++l)
    sums[l].assign(graph.nodes_per_layer[l], 0.0);
  for (const auto& e : graph.edges) {
    if (e.target.layer >= sums.size() || e.target.index >= sums[e.target.layer].size())
      throw ConsistencyError("edge target outside graph");
    sums[e.target.layer][e.target.index] += e.contribution;
  }

  EquivalenceReport report;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    if (!is_parametric(spec.layers[l])) continue;
    const auto gl = std::size_t(gmap[l]);
    if (gl >= sums.size()) throw ConsistencyError("graph has fewer layers than the network");
    const Tensor& pre = rec.pre_activation[l];
    const Tensor& bias = weights.layers[l].bias;
    const std::size_t per_channel = pre.size() / bias.size();
    double worst = 0.0;
    for (std::size_t v = 0; v < pre.size(); ++v) {
      const double dev = std::fabs(sums[gl][v] + bias.data[v / per_channel] - pre.data[v]);
      if (!(dev <= tolerance))
        throw ValidationError("forward equivalence violated at node (layer " + std::to_string(gl) +
                              ", index " + std::to_string(v) + "): deviation " +
                              std::to_string(dev));
      worst = std::max(worst, dev);
    }
    report.max_deviation.emplace_back(gl, worst);
    report.worst = std::max(report.worst, worst);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Binary serialization: magic "NTG1", little-endian.
//   u32 id length, id bytes, u32 layer count, u64 nodes per layer...,
//   u64 edge count, then per edge: u32 source layer, u32 source index,
//   u32 target index, f64 contribution.

namespace detail {

template <class T>
void put_le(std::string& buf, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    buf.append(reinterpret_cast<const char*>(bytes), sizeof(T));
  } else {
    buf.append(reinterpret_cast<const char*>(&value), sizeof(T));
  }
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

  template <class T>
  T get() {
    if (pos_ + sizeof(T) > data_.size()) throw FormatError(what_ + ": truncated");
    T value;
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::string get_bytes(std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError(what_ + ": truncated");
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void expect_magic(const char* magic) {
    if (get_bytes(4) != magic) throw FormatError(what_ + ": bad magic");
  }

  bool at_end() const { return pos_ == data_.size(); }

 private:
  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void dump(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

}  // namespace detail

inline std::string serialize_graph(const InducedGraph& g) {
  std::string buf = "NTG1";
  detail::put_le(buf, std::uint32_t(g.input_id.size()));
  buf += g.input_id;
  detail::put_le(buf, std::uint32_t(g.nodes_per_layer.size()));
  for (auto n : g.nodes_per_layer) detail::put_le(buf, std::uint64_t(n));
  detail::put_le(buf, std::uint64_t(g.edges.size()));
  for (const auto& e : g.edges) {
    detail::put_le(buf, e.source.layer);
    detail::put_le(buf, e.source.index);
    detail::put_le(buf, e.target.index);
    detail::put_le(buf, e.contribution);
  }
  return buf;
}

inline InducedGraph deserialize_graph(std::string bytes, const std::string& what = "graph") {
  detail::ByteReader r(std::move(bytes), what);
  r.expect_magic("NTG1");
  InducedGraph g;
  g.input_id = r.get_bytes(r.get<std::uint32_t>());
  const auto layers = r.get<std::uint32_t>();
  for (std::uint32_t l = 0; l < layers; ++l) g.nodes_per_layer.push_back(r.get<std::uint64_t>());
  const auto n = r.get<std::uint64_t>();
  g.edges.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    InducedEdge e;
    e.source.layer = r.get<std::uint32_t>();
    e.source.index = r.get<std::uint32_t>();
    e.target.layer = e.source.layer + 1;
    e.target.index = r.get<std::uint32_t>();
    e.contribution = r.get<double>();
    e.phi = std::fabs(e.contribution);
    if (e.target.layer >= g.nodes_per_layer.size() ||
        e.source.index >= g.nodes_per_layer[e.source.layer] ||
        e.target.index >= g.nodes_per_layer[e.target.layer])
      throw FormatError(what + ": edge " + std::to_string(i) + " references a missing node");
    g.edges.push_back(e);
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes");
  return g;
}

inline void save_graph(const InducedGraph& g, const std::string& path) {
  detail::dump(path, serialize_graph(g));
}

inline InducedGraph load_graph(const std::string& path) {
  return deserialize_graph(detail::slurp(path), path);
}

}  // namespace nntopo
