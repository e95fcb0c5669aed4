#pragma once

// Minimal feedforward network engine: layer specs, forward pass with full
// activation recording, reverse-mode gradients, SGD training and the two
// reference architectures (ccff-relu / ccff-sigmoid).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "nntopo/dataset.hpp"
#include "nntopo/error.hpp"
#include "nntopo/tensor.hpp"

namespace nntopo {

enum class Activation { relu, sigmoid, identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw UsageError("unknown activation '" + s + "'");
}

struct Dense {
  std::size_t in = 1;
  std::size_t out = 1;
  Activation activation = Activation::identity;
  friend bool operator==(const Dense&, const Dense&) = default;
};

struct Conv2d {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Activation activation = Activation::identity;
  friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

struct MaxPool2d {
  std::size_t kernel = 2;
  std::size_t stride = 2;
  friend bool operator==(const MaxPool2d&, const MaxPool2d&) = default;
};

struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};

using LayerSpec = std::variant<Dense, Conv2d, MaxPool2d, Flatten>;

inline std::string layer_name(const LayerSpec& layer) {
  return std::visit(
      [](const auto& l) -> std::string {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Dense>) return "Dense";
        else if constexpr (std::is_same_v<T, Conv2d>) return "Conv2d";
        else if constexpr (std::is_same_v<T, MaxPool2d>) return "MaxPool2d";
        else return "Flatten";
      },
      layer);
}

inline bool is_parametric(const LayerSpec& layer) {
  return std::holds_alternative<Dense>(layer) || std::holds_alternative<Conv2d>(layer);
}

inline Activation layer_activation(const LayerSpec& layer) {
  if (auto* d = std::get_if<Dense>(&layer)) return d->activation;
  if (auto* c = std::get_if<Conv2d>(&layer)) return c->activation;
  return Activation::identity;
}

struct NetworkSpec {
  Shape input_shape;
  std::vector<LayerSpec> layers;

  /// Output shape of every layer; throws ConfigError naming the first layer
  /// whose expected input does not match what the previous layer produces.
  std::vector<Shape> output_shapes() const {
    if (input_shape.empty() || shape_size(input_shape) == 0)
      throw ConfigError("network input shape must be non-empty");
    std::vector<Shape> shapes;
    Shape cur = input_shape;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      auto fail = [&](const std::string& why) {
        throw ConfigError("layer " + std::to_string(l) + " (" + layer_name(layers[l]) +
                          "): " + why + "; incoming shape " + shape_string(cur));
      };
      std::visit(
          [&](const auto& layer) {
            using T = std::decay_t<decltype(layer)>;
            if constexpr (std::is_same_v<T, Dense>) {
              if (layer.in == 0 || layer.out == 0) fail("dimensions must be >= 1");
              if (cur.size() != 1 || cur[0] != layer.in)
                fail("expects a flat input of size " + std::to_string(layer.in));
              cur = {layer.out};
            } else if constexpr (std::is_same_v<T, Conv2d>) {
              if (layer.in_channels == 0 || layer.out_channels == 0 || layer.kernel_h == 0 ||
                  layer.kernel_w == 0 || layer.stride == 0)
                fail("dimensions and stride must be >= 1");
              if (cur.size() != 3 || cur[0] != layer.in_channels)
                fail("expects " + std::to_string(layer.in_channels) + " input channels");
              const std::size_t ph = cur[1] + 2 * layer.padding;
              const std::size_t pw = cur[2] + 2 * layer.padding;
              if (ph < layer.kernel_h || pw < layer.kernel_w) fail("kernel larger than input");
              cur = {layer.out_channels, (ph - layer.kernel_h) / layer.stride + 1,
                     (pw - layer.kernel_w) / layer.stride + 1};
            } else if constexpr (std::is_same_v<T, MaxPool2d>) {
              if (layer.kernel == 0 || layer.stride == 0) fail("kernel and stride must be >= 1");
              if (cur.size() != 3) fail("expects a C x H x W input");
              if (cur[1] < layer.kernel || cur[2] < layer.kernel) fail("window larger than input");
              cur = {cur[0], (cur[1] - layer.kernel) / layer.stride + 1,
                     (cur[2] - layer.kernel) / layer.stride + 1};
            } else {
              cur = {shape_size(cur)};
            }
          },
          layers[l]);
      shapes.push_back(cur);
    }
    return shapes;
  }

  std::size_t num_classes() const {
    if (layers.empty()) return shape_size(input_shape);
    return shape_size(output_shapes().back());
  }

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Parameters of one layer; both tensors are empty for MaxPool2d/Flatten.
struct LayerParams {
  Tensor weight;
  Tensor bias;
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// One LayerParams per spec layer (parallel to NetworkSpec::layers).
struct NetworkWeights {
  std::vector<LayerParams> layers;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : layers) n += p.weight.size() + p.bias.size();
    return n;
  }

  friend bool operator==(const NetworkWeights&, const NetworkWeights&) = default;
};

inline Shape expected_weight_shape(const LayerSpec& layer) {
  if (auto* d = std::get_if<Dense>(&layer)) return {d->out, d->in};
  if (auto* c = std::get_if<Conv2d>(&layer))
    return {c->out_channels, c->in_channels, c->kernel_h, c->kernel_w};
  return {};
}

inline Shape expected_bias_shape(const LayerSpec& layer) {
  if (auto* d = std::get_if<Dense>(&layer)) return {d->out};
  if (auto* c = std::get_if<Conv2d>(&layer)) return {c->out_channels};
  return {};
}

inline void validate_weights(const NetworkSpec& spec, const NetworkWeights& weights) {
  if (weights.layers.size() != spec.layers.size())
    throw ConfigError("weights have " + std::to_string(weights.layers.size()) +
                      " layers, spec has " + std::to_string(spec.layers.size()));
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const auto& p = weights.layers[l];
    const std::string where =
        "layer " + std::to_string(l) + " (" + layer_name(spec.layers[l]) + ")";
    if (!is_parametric(spec.layers[l])) {
      if (!p.weight.empty() || !p.bias.empty())
        throw ConfigError(where + ": non-parametric layer carries parameters");
      continue;
    }
    if (p.weight.shape != expected_weight_shape(spec.layers[l]) ||
        p.weight.size() != shape_size(p.weight.shape))
      throw ConfigError(where + ": weight shape " + shape_string(p.weight.shape) +
                        ", expected " + shape_string(expected_weight_shape(spec.layers[l])));
    if (p.bias.shape != expected_bias_shape(spec.layers[l]) ||
        p.bias.size() != shape_size(p.bias.shape))
      throw ConfigError(where + ": bias shape " + shape_string(p.bias.shape) + ", expected " +
                        shape_string(expected_bias_shape(spec.layers[l])));
  }
}

/// Uniform Glorot initialization on +-sqrt(6 / (fan_in + fan_out)); biases 0.
inline NetworkWeights init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  spec.output_shapes();
  std::mt19937_64 rng(seed);
  NetworkWeights w;
  for (const auto& layer : spec.layers) {
    LayerParams p;
    if (is_parametric(layer)) {
      p.weight = Tensor(expected_weight_shape(layer));
      p.bias = Tensor(expected_bias_shape(layer));
      double fan_in = 0, fan_out = 0;
      if (auto* d = std::get_if<Dense>(&layer)) {
        fan_in = double(d->in);
        fan_out = double(d->out);
      } else {
        const auto& c = std::get<Conv2d>(layer);
        fan_in = double(c.in_channels * c.kernel_h * c.kernel_w);
        fan_out = double(c.out_channels * c.kernel_h * c.kernel_w);
      }
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (double& v : p.weight.data) v = dist(rng);
    }
    w.layers.push_back(std::move(p));
  }
  return w;
}

/// Everything one forward pass produces. `argmax[l]` is filled only for
/// MaxPool2d layers and holds, per output position, the linear index of the
/// winning node in that layer's input.
struct ActivationRecord {
  Tensor input;
  std::vector<Tensor> pre_activation;
  std::vector<Tensor> post_activation;
  std::vector<std::vector<std::size_t>> argmax;
  Tensor logits;
  int predicted_class = -1;

  friend bool operator==(const ActivationRecord&, const ActivationRecord&) = default;
};

namespace detail {

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::identity: return z;
  }
  return z;
}

// Derivative expressed through the pre-activation z and the output y.
inline double activation_derivative(Activation a, double z, double y) {
  switch (a) {
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return y * (1.0 - y);
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

inline std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline void dense_forward(const Dense& d, const LayerParams& p, const Tensor& in, Tensor& out) {
  out = Tensor({d.out});
  for (std::size_t o = 0; o < d.out; ++o) {
    const double* row = &p.weight.data[o * d.in];
    double s = p.bias.data[o];
    for (std::size_t i = 0; i < d.in; ++i) s += row[i] * in.data[i];
    out.data[o] = s;
  }
}

inline void conv_forward(const Conv2d& c, const LayerParams& p, const Tensor& in,
                         const Shape& out_shape, Tensor& out) {
  out = Tensor(out_shape);
  const std::size_t H = in.shape[1], W = in.shape[2];
  const std::size_t OH = out_shape[1], OW = out_shape[2];
  for (std::size_t oc = 0; oc < c.out_channels; ++oc)
    for (std::size_t oy = 0; oy < OH; ++oy)
      for (std::size_t ox = 0; ox < OW; ++ox) {
        double s = p.bias.data[oc];
        for (std::size_t ic = 0; ic < c.in_channels; ++ic)
          for (std::size_t ky = 0; ky < c.kernel_h; ++ky) {
            const std::ptrdiff_t y = std::ptrdiff_t(oy * c.stride + ky) - std::ptrdiff_t(c.padding);
            if (y < 0 || y >= std::ptrdiff_t(H)) continue;
            for (std::size_t kx = 0; kx < c.kernel_w; ++kx) {
              const std::ptrdiff_t x =
                  std::ptrdiff_t(ox * c.stride + kx) - std::ptrdiff_t(c.padding);
              if (x < 0 || x >= std::ptrdiff_t(W)) continue;
              s += p.weight.data[((oc * c.in_channels + ic) * c.kernel_h + ky) * c.kernel_w + kx] *
                   in.at(ic, std::size_t(y), std::size_t(x));
            }
          }
        out.at(oc, oy, ox) = s;
      }
}

inline void pool_forward(const MaxPool2d& m, const Tensor& in, const Shape& out_shape, Tensor& out,
                         std::vector<std::size_t>& arg) {
  out = Tensor(out_shape);
  arg.assign(out.size(), 0);
  const std::size_t H = in.shape[1], W = in.shape[2];
  for (std::size_t ch = 0; ch < out_shape[0]; ++ch)
    for (std::size_t oy = 0; oy < out_shape[1]; ++oy)
      for (std::size_t ox = 0; ox < out_shape[2]; ++ox) {
        std::size_t best = (ch * H + oy * m.stride) * W + ox * m.stride;
        for (std::size_t ky = 0; ky < m.kernel; ++ky)
          for (std::size_t kx = 0; kx < m.kernel; ++kx) {
            const std::size_t idx = (ch * H + oy * m.stride + ky) * W + ox * m.stride + kx;
            if (in.data[idx] > in.data[best]) best = idx;
          }
        const std::size_t o = (ch * out_shape[1] + oy) * out_shape[2] + ox;
        out.data[o] = in.data[best];
        arg[o] = best;
      }
}

}  // namespace detail

/// Runs the network on one input and records every intermediate tensor.
/// Logits are the pre-activation of the final layer; the final layer's
/// activation is still applied to produce its post-activation.
inline ActivationRecord forward(const NetworkSpec& spec, const NetworkWeights& weights,
                                const Tensor& input) {
  const auto shapes = spec.output_shapes();
  validate_weights(spec, weights);
  if (input.shape != spec.input_shape)
    throw ConfigError("input shape " + shape_string(input.shape) + " does not match network input " +
                      shape_string(spec.input_shape));

  ActivationRecord rec;
  rec.input = input;
  const std::size_t L = spec.layers.size();
  rec.pre_activation.resize(L);
  rec.post_activation.resize(L);
  rec.argmax.resize(L);

  const Tensor* cur = &rec.input;
  for (std::size_t l = 0; l < L; ++l) {
    Tensor& pre = rec.pre_activation[l];
    std::visit(
        [&](const auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, Dense>) {
            detail::dense_forward(layer, weights.layers[l], *cur, pre);
          } else if constexpr (std::is_same_v<T, Conv2d>) {
            detail::conv_forward(layer, weights.layers[l], *cur, shapes[l], pre);
          } else if constexpr (std::is_same_v<T, MaxPool2d>) {
            detail::pool_forward(layer, *cur, shapes[l], pre, rec.argmax[l]);
          } else {
            pre = Tensor(shapes[l], cur->data);
          }
        },
        spec.layers[l]);
    const Activation act = layer_activation(spec.layers[l]);
    Tensor post = pre;
    if (act != Activation::identity)
      for (double& v : post.data) v = detail::activate(act, v);
    rec.post_activation[l] = std::move(post);
    cur = &rec.post_activation[l];
  }
  rec.logits = L ? rec.pre_activation.back() : rec.input;
  rec.predicted_class = int(detail::argmax_lowest(rec.logits.data));
  return rec;
}

inline int predict(const NetworkSpec& spec, const NetworkWeights& weights, const Tensor& input) {
  return forward(spec, weights, input).predicted_class;
}

/// Softmax cross-entropy of `logits` against `label`, with max subtraction.
inline double softmax_cross_entropy(std::span<const double> logits, int label,
                                    std::vector<double>* probabilities = nullptr) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double loss = std::log(z) + m - logits[std::size_t(label)];
  if (probabilities) {
    probabilities->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) (*probabilities)[i] = std::exp(logits[i] - m) / z;
  }
  return loss;
}

struct Gradients {
  NetworkWeights weights;
  Tensor input;
};

/// Reverse-mode pass for a recorded forward pass given dLoss/dLogits.
/// Max-pool routes gradient only through the recorded argmax positions.
inline Gradients backward(const NetworkSpec& spec, const NetworkWeights& weights,
                          const ActivationRecord& rec, const std::vector<double>& dlogits) {
  const std::size_t L = spec.layers.size();
  Gradients g;
  g.weights.layers.resize(L);
  if (L == 0) {
    g.input = Tensor(rec.input.shape, dlogits);
    return g;
  }

  std::vector<double> grad_pre = dlogits;  // dLoss/d(pre-activation of layer l)
  for (std::size_t li = L; li-- > 0;) {
    const Tensor& in = li ? rec.post_activation[li - 1] : rec.input;
    std::vector<double> grad_in(in.size(), 0.0);
    LayerParams& gp = g.weights.layers[li];
    const LayerParams& p = weights.layers[li];

    std::visit(
        [&](const auto& layer) {
          using T = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<T, Dense>) {
            gp.weight = Tensor(p.weight.shape);
            gp.bias = Tensor(p.bias.shape);
            for (std::size_t o = 0; o < layer.out; ++o) {
              const double go = grad_pre[o];
              gp.bias.data[o] = go;
              if (go == 0.0) continue;
              const double* row = &p.weight.data[o * layer.in];
              double* grow = &gp.weight.data[o * layer.in];
              for (std::size_t i = 0; i < layer.in; ++i) {
                grow[i] = go * in.data[i];
                grad_in[i] += row[i] * go;
              }
            }
          } else if constexpr (std::is_same_v<T, Conv2d>) {
            gp.weight = Tensor(p.weight.shape);
            gp.bias = Tensor(p.bias.shape);
            const std::size_t H = in.shape[1], W = in.shape[2];
            const Shape& os = rec.pre_activation[li].shape;
            for (std::size_t oc = 0; oc < layer.out_channels; ++oc)
              for (std::size_t oy = 0; oy < os[1]; ++oy)
                for (std::size_t ox = 0; ox < os[2]; ++ox) {
                  const double go = grad_pre[(oc * os[1] + oy) * os[2] + ox];
                  gp.bias.data[oc] += go;
                  if (go == 0.0) continue;
                  for (std::size_t ic = 0; ic < layer.in_channels; ++ic)
                    for (std::size_t ky = 0; ky < layer.kernel_h; ++ky) {
                      const std::ptrdiff_t y =
                          std::ptrdiff_t(oy * layer.stride + ky) - std::ptrdiff_t(layer.padding);
                      if (y < 0 || y >= std::ptrdiff_t(H)) continue;
                      for (std::size_t kx = 0; kx < layer.kernel_w; ++kx) {
                        const std::ptrdiff_t x =
                            std::ptrdiff_t(ox * layer.stride + kx) - std::ptrdiff_t(layer.padding);
                        if (x < 0 || x >= std::ptrdiff_t(W)) continue;
                        const std::size_t widx =
                            ((oc * layer.in_channels + ic) * layer.kernel_h + ky) * layer.kernel_w + kx;
                        const std::size_t iidx = (ic * H + std::size_t(y)) * W + std::size_t(x);
                        gp.weight.data[widx] += go * in.data[iidx];
                        grad_in[iidx] += p.weight.data[widx] * go;
                      }
                    }
                }
          } else if constexpr (std::is_same_v<T, MaxPool2d>) {
            const auto& arg = rec.argmax[li];
            for (std::size_t o = 0; o < arg.size(); ++o) grad_in[arg[o]] += grad_pre[o];
          } else {
            grad_in = grad_pre;
          }
        },
        spec.layers[li]);

    if (li == 0) {
      g.input = Tensor(rec.input.shape, std::move(grad_in));
      break;
    }
    // Chain through the previous layer's activation.
    const Activation act = layer_activation(spec.layers[li - 1]);
    const Tensor& z = rec.pre_activation[li - 1];
    const Tensor& y = rec.post_activation[li - 1];
    grad_pre.assign(grad_in.size(), 0.0);
    for (std::size_t i = 0; i < grad_in.size(); ++i)
      grad_pre[i] = grad_in[i] * detail::activation_derivative(act, z.data[i], y.data[i]);
  }
  return g;
}

struct LossAndGradients {
  double loss = 0.0;
  NetworkWeights weight_grads;
  Tensor input_grad;
  ActivationRecord record;
};

/// Softmax cross-entropy loss on the logits with exact gradients for every
/// parameter and for the input pixels.
inline LossAndGradients loss_and_gradients(const NetworkSpec& spec, const NetworkWeights& weights,
                                           const Tensor& input, int true_label) {
  LossAndGradients out;
  out.record = forward(spec, weights, input);
  const auto& logits = out.record.logits.data;
  if (true_label < 0 || std::size_t(true_label) >= logits.size())
    throw UsageError("label " + std::to_string(true_label) + " outside [0, " +
                     std::to_string(logits.size()) + ")");
  std::vector<double> prob;
  out.loss = softmax_cross_entropy(logits, true_label, &prob);
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  prob[std::size_t(true_label)] -= 1.0;
  auto g = backward(spec, weights, out.record, prob);
  out.weight_grads = std::move(g.weights);
  out.input_grad = std::move(g.input);
  return out;
}

struct TrainOptions {
  std::size_t epochs = 20;
  double learning_rate = 0.01;
  std::size_t batch = 1;
  std::uint64_t seed = 0;
};

struct TrainResult {
  NetworkWeights weights;
  std::vector<double> epoch_losses;
};

/// Minibatch SGD with a seeded per-epoch shuffle. `on_epoch(epoch, mean_loss)`
/// is called after every epoch.
inline TrainResult sgd_train(const NetworkSpec& spec, NetworkWeights weights,
                             const LabeledDataset& data, const TrainOptions& opt,
                             const std::function<void(std::size_t, double)>& on_epoch = {}) {
  if (data.empty()) throw UsageError("training set is empty");
  if (!(opt.learning_rate >= 0.0)) throw UsageError("learning rate must be >= 0");
  if (opt.batch == 0) throw UsageError("batch size must be >= 1");
  validate_weights(spec, weights);

  TrainResult result;
  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch) {
      const std::size_t end = std::min(order.size(), start + opt.batch);
      NetworkWeights acc;
      for (std::size_t k = start; k < end; ++k) {
        LossAndGradients lg;
        try {
          lg = loss_and_gradients(spec, weights, data.images[order[k]], data.labels[order[k]]);
        } catch (const NumericError&) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch));
        }
        loss_sum += lg.loss;
        if (acc.layers.empty()) {
          acc = std::move(lg.weight_grads);
        } else {
          for (std::size_t l = 0; l < acc.layers.size(); ++l) {
            auto& a = acc.layers[l];
            const auto& b = lg.weight_grads.layers[l];
            for (std::size_t i = 0; i < a.weight.size(); ++i) a.weight.data[i] += b.weight.data[i];
            for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias.data[i] += b.bias.data[i];
          }
        }
      }
      if (opt.learning_rate == 0.0) continue;
      const double scale = opt.learning_rate / double(end - start);
      for (std::size_t l = 0; l < weights.layers.size(); ++l) {
        auto& w = weights.layers[l];
        const auto& g = acc.layers[l];
        for (std::size_t i = 0; i < w.weight.size(); ++i) w.weight.data[i] -= scale * g.weight.data[i];
        for (std::size_t i = 0; i < w.bias.size(); ++i) w.bias.data[i] -= scale * g.bias.data[i];
      }
    }
    const double mean = loss_sum / double(data.size());
    if (!std::isfinite(mean))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    result.epoch_losses.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  result.weights = std::move(weights);
  return result;
}

inline double accuracy(const NetworkSpec& spec, const NetworkWeights& weights,
                       const LabeledDataset& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    correct += predict(spec, weights, data.images[i]) == data.labels[i];
  return double(correct) / double(data.size());
}

/// Reference architectures for 28x28 single-channel inputs: two valid
/// convolutions (3 filters of 5x5, then 3 of 3x3) and two dense layers,
/// 1452 -> 256 -> 10, all carrying the same activation.
inline NetworkSpec preset(const std::string& name) {
  Activation act;
  if (name == "ccff-relu") act = Activation::relu;
  else if (name == "ccff-sigmoid") act = Activation::sigmoid;
  else throw UsageError("unknown architecture preset '" + name + "' (expected ccff-relu or ccff-sigmoid)");

  NetworkSpec spec;
  spec.input_shape = {1, 28, 28};
  spec.layers = {
      Conv2d{1, 3, 5, 5, 1, 0, act},
      Conv2d{3, 3, 3, 3, 1, 0, act},
      Flatten{},
      Dense{1452, 256, act},
      Dense{256, 10, act},
  };
  return spec;
}

}  // namespace nntopo
