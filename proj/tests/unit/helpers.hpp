#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "nntopo/nntopo.hpp"

namespace testing_helpers {

using namespace nntopo;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(shape);
  for (double& v : t.data) v = u(rng);
  return t;
}

inline Activation random_activation(std::mt19937_64& rng) {
  static const Activation all[] = {Activation::relu, Activation::sigmoid, Activation::identity};
  return all[rng() % 3];
}

/// Small networks (<= 50 parameters) covering dense, conv with stride and
/// padding, max pooling and flatten.
inline NetworkSpec random_small_spec(std::mt19937_64& rng) {
  NetworkSpec s;
  switch (rng() % 4) {
    case 0: {
      const std::size_t in = 2 + rng() % 3, hidden = 2 + rng() % 4, out = 2 + rng() % 2;
      s.input_shape = {in};
      s.layers = {Dense{in, hidden, random_activation(rng)}, Dense{hidden, out, random_activation(rng)}};
      break;
    }
    case 1:
      s.input_shape = {1, 4, 4};
      s.layers = {Conv2d{1, 2, 2, 2, 1, 0, random_activation(rng)}, MaxPool2d{2, 1}, Flatten{},
                  Dense{8, 3, random_activation(rng)}};
      break;
    case 2:
      s.input_shape = {1, 5, 5};
      s.layers = {Conv2d{1, 1, 3, 3, 2, 1, random_activation(rng)}, Flatten{}, Dense{9, 2, random_activation(rng)}};
      break;
    default:
      s.input_shape = {2, 4, 4};
      s.layers = {Conv2d{2, 1, 2, 2, 2, 0, random_activation(rng)}, Flatten{}, Dense{4, 3, Activation::identity},
                  Dense{3, 2, random_activation(rng)}};
      break;
  }
  return s;
}

/// Weights drawn away from zero so that relu kinks and pooling ties are
/// unlikely near the evaluation point.
inline NetworkWeights random_weights(const NetworkSpec& spec, std::mt19937_64& rng) {
  auto w = init_weights(spec, rng());
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto& p : w.layers) {
    for (double& v : p.weight.data) v = v * 2.0 + u(rng) * 0.1;
    for (double& v : p.bias.data) v = u(rng);
  }
  return w;
}

inline double relative_error(double analytic, double numeric) {
  return std::fabs(analytic - numeric) / std::max({std::fabs(analytic), std::fabs(numeric), 1e-4});
}

/// Random multipartite graph over `layers` node layers with continuous
/// weights; at most one edge per (source, target).
inline InducedGraph random_graph(std::mt19937_64& rng, std::size_t max_vertices = 50, std::size_t max_edges = 200) {
  InducedGraph g;
  const std::size_t layers = 2 + rng() % 4;
  std::size_t total = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t n = 1 + rng() % std::max<std::size_t>(1, max_vertices / layers);
    g.nodes_per_layer.push_back(n);
    total += n;
  }
  std::vector<std::pair<NodeId, NodeId>> candidates;
  for (std::uint32_t l = 0; l + 1 < layers; ++l)
    for (std::uint32_t a = 0; a < g.nodes_per_layer[l]; ++a)
      for (std::uint32_t b = 0; b < g.nodes_per_layer[l + 1]; ++b) candidates.push_back({{l, a}, {l + 1, b}});
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const std::size_t m = std::min<std::size_t>(candidates.size(), 1 + rng() % max_edges);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  for (std::size_t i = 0; i < m; ++i) {
    InducedEdge e;
    e.source = candidates[i].first;
    e.target = candidates[i].second;
    do e.contribution = w(rng);
    while (e.contribution == 0.0);
    e.phi = std::fabs(e.contribution);
    g.edges.push_back(e);
  }
  g.input_id = "random-graph";
  (void)total;
  return g;
}

inline Diagram random_diagram(std::mt19937_64& rng, std::size_t max_points) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Diagram d;
  const std::size_t n = rng() % (max_points + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    d.points.push_back({std::max(a, b), std::min(a, b)});
  }
  return d;
}

/// Exhaustive matching oracle: every partial injection of A into B, the
/// rest of both sides going to the diagonal. Returns (sum of cost^q)^(1/q)
/// or, with q = infinity, the minimax cost.
inline double brute_force_matching(const Diagram& a, const Diagram& b, double q) {
  const std::size_t n = a.size(), m = b.size();
  const bool inf = std::isinf(q);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> match(n, -1);
  std::vector<char> used(m, 0);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      double total = 0.0;
      auto add = [&](double c) { total = inf ? std::max(total, c) : total + std::pow(c, q); };
      for (std::size_t k = 0; k < n; ++k)
        add(match[k] < 0 ? diagonal_distance(a.points[k]) : linf(a.points[k], b.points[std::size_t(match[k])]));
      for (std::size_t k = 0; k < m; ++k)
        if (!used[k]) add(diagonal_distance(b.points[k]));
      best = std::min(best, inf ? total : std::pow(total, 1.0 / q));
      return;
    }
    match[i] = -1;
    rec(i + 1);
    for (std::size_t j = 0; j < m; ++j) {
      if (used[j]) continue;
      used[j] = 1;
      match[i] = int(j);
      rec(i + 1);
      used[j] = 0;
    }
    match[i] = -1;
  };
  rec(0);
  return best;
}

inline LifetimeVector random_vector(std::mt19937_64& rng, std::uint32_t dims, bool binary, std::uint64_t universe = 7) {
  LifetimeVector v;
  v.universe = universe;
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (std::uint32_t d = 0; d < dims; ++d)
    if (rng() % 2) {
      v.dims.push_back(d);
      v.values.push_back(binary ? 1.0 : u(rng));
    }
  return v;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("nntopo-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
  std::string operator/(const std::string& rel) const { return (path / rel).string(); }
};

inline Tensor vec(std::initializer_list<double> v) { return Tensor({v.size()}, std::vector<double>(v)); }

}  // namespace testing_helpers
