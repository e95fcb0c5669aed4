#pragma once

// Edge-indexed vectorization of persistent subgraphs, the lifetime-weighted
// distance between them and the exponential kernel built on that distance.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nntopo/error.hpp"
#include "nntopo/graph.hpp"
#include "nntopo/parallel.hpp"
#include "nntopo/persistence.hpp"

namespace nntopo {

/// Packs (source layer, source index, target index) into one sortable key.
/// Sorting keys sorts edges by (layer, source, target).
inline std::uint64_t edge_key(const InducedEdge& e) {
  if (e.source.layer >= (1u << 8) || e.source.index >= (1u << 28) || e.target.index >= (1u << 28))
    throw UsageError("edge identity exceeds the 8/28/28-bit key layout");
  return (std::uint64_t(e.source.layer) << 56) | (std::uint64_t(e.source.index) << 28) |
         std::uint64_t(e.target.index);
}

inline InducedEdge edge_from_key(std::uint64_t key) {
  InducedEdge e;
  e.source.layer = std::uint32_t(key >> 56);
  e.source.index = std::uint32_t((key >> 28) & ((1u << 28) - 1));
  e.target.layer = e.source.layer + 1;
  e.target.index = std::uint32_t(key & ((1u << 28) - 1));
  return e;
}

/// Ordered set of edge identities; dimension d is the d-th smallest key.
class EdgeUniverse {
 public:
  EdgeUniverse() = default;

  /// Union of the edges of every graph.
  template <class GraphRange>
  static EdgeUniverse from_graphs(const GraphRange& graphs) {
    EdgeUniverse u;
    for (const InducedGraph& g : graphs)
      for (const auto& e : g.edges) u.keys_.push_back(edge_key(e));
    u.finish();
    return u;
  }

  static EdgeUniverse from_keys(std::vector<std::uint64_t> keys) {
    EdgeUniverse u;
    u.keys_ = std::move(keys);
    u.finish();
    return u;
  }

  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  const std::vector<std::uint64_t>& keys() const noexcept { return keys_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  std::optional<std::uint32_t> dimension(std::uint64_t key) const {
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return std::nullopt;
    return std::uint32_t(it - keys_.begin());
  }

  /// Text manifest: one "layer source target" line per dimension.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (auto k : keys_) {
      const auto e = edge_from_key(k);
      out << e.source.layer << ' ' << e.source.index << ' ' << e.target.index << '\n';
    }
  }

  static EdgeUniverse load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<std::uint64_t> keys;
    InducedEdge e;
    while (in >> e.source.layer >> e.source.index >> e.target.index) keys.push_back(edge_key(e));
    if (!in.eof()) throw FormatError(path + ": malformed universe manifest");
    return from_keys(std::move(keys));
  }

 private:
  void finish() {
    if (keys_.size() >= std::size_t(std::numeric_limits<std::uint32_t>::max()))
      throw UsageError("edge universe exceeds 2^32 dimensions");
    std::sort(keys_.begin(), keys_.end());
    keys_.erase(std::unique(keys_.begin(), keys_.end()), keys_.end());
    fingerprint_ = 1469598103934665603ull;  // FNV-1a over the keys
    for (auto k : keys_) {
      fingerprint_ ^= k;
      fingerprint_ *= 1099511628211ull;
    }
  }

  std::vector<std::uint64_t> keys_;
  std::uint64_t fingerprint_ = 0;
};

enum class VectorMode { binary, lifetime_weighted };

/// Sparse vector over an EdgeUniverse; `dims` strictly increasing.
struct LifetimeVector {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;
  std::string owner;
  std::uint64_t universe = 0;  // EdgeUniverse::fingerprint()

  std::size_t nnz() const noexcept { return dims.size(); }
  friend bool operator==(const LifetimeVector&, const LifetimeVector&) = default;
};

/// One entry per generator edge present in the universe: 1 (binary) or
/// lifetime(generator) * phi(edge). Edges outside the universe are dropped.
inline LifetimeVector vectorize(const InducedGraph& graph, const PersistenceResult& result,
                                const EdgeUniverse& universe, VectorMode mode) {
  if (universe.empty()) throw UsageError("cannot vectorize against an empty edge universe");
  std::vector<std::pair<std::uint32_t, double>> entries;
  entries.reserve(result.edge_count);
  for (const auto& g : result.generators)
    for (auto ei : g.edges) {
      if (ei >= graph.edges.size()) throw ConsistencyError("generator edge outside graph");
      const auto& e = graph.edges[ei];
      const auto dim = universe.dimension(edge_key(e));
      if (!dim) continue;
      const double value = mode == VectorMode::binary ? 1.0 : g.pair.lifetime * e.phi;
      entries.emplace_back(*dim, value);
    }
  std::sort(entries.begin(), entries.end());
  LifetimeVector v;
  v.owner = result.input_id;
  v.universe = universe.fingerprint();
  v.dims.reserve(entries.size());
  v.values.reserve(entries.size());
  for (const auto& [d, x] : entries) {
    if (!v.dims.empty() && v.dims.back() == d)
      throw ConsistencyError("edge assigned to two generators in '" + result.input_id + "'");
    v.dims.push_back(d);
    v.values.push_back(x);
  }
  return v;
}

/// L1 distance over the union of occupied dimensions (Hamming distance for
/// binary vectors).
inline double lifetime_weighted_distance(const LifetimeVector& a, const LifetimeVector& b) {
  if (a.universe != b.universe) throw UsageError("vectors come from different edge universes");
  double s = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.dims.size() && j < b.dims.size()) {
    if (a.dims[i] == b.dims[j]) {
      s += std::fabs(a.values[i++] - b.values[j++]);
    } else if (a.dims[i] < b.dims[j]) {
      s += std::fabs(a.values[i++]);
    } else {
      s += std::fabs(b.values[j++]);
    }
  }
  for (; i < a.dims.size(); ++i) s += std::fabs(a.values[i]);
  for (; j < b.dims.size(); ++j) s += std::fabs(b.values[j]);
  return s;
}

inline Eigen::MatrixXd pairwise_distances(const std::vector<LifetimeVector>& v) {
  const std::size_t n = v.size();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = lifetime_weighted_distance(v[i], v[j]);
      d(Eigen::Index(i), Eigen::Index(j)) = x;
      d(Eigen::Index(j), Eigen::Index(i)) = x;
    }
  });
  return d;
}

/// rows = queries, cols = references.
inline Eigen::MatrixXd cross_distances(const std::vector<LifetimeVector>& queries,
                                       const std::vector<LifetimeVector>& refs) {
  Eigen::MatrixXd d(Eigen::Index(queries.size()), Eigen::Index(refs.size()));
  parallel_for(queries.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < refs.size(); ++j)
      d(Eigen::Index(i), Eigen::Index(j)) = lifetime_weighted_distance(queries[i], refs[j]);
  });
  return d;
}

struct KernelMatrix {
  Eigen::MatrixXd values;
  double gamma = 1.0;
  bool gamma_fallback = false;  // auto gamma hit a zero median and fell back to 1
};

/// 1 / median of the strictly off-diagonal entries of a square distance
/// matrix; nullopt when that median is 0 (or there are no such entries).
inline std::optional<double> median_gamma(const Eigen::MatrixXd& d) {
  std::vector<double> off;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.cols(); ++j) off.push_back(d(i, j));
  if (off.empty()) return std::nullopt;
  const auto mid = off.begin() + std::ptrdiff_t(off.size() / 2);
  std::nth_element(off.begin(), mid, off.end());
  double med = *mid;
  if (off.size() % 2 == 0) med = (med + *std::max_element(off.begin(), mid)) / 2.0;
  if (!(med > 0.0)) return std::nullopt;
  return 1.0 / med;
}

inline Eigen::MatrixXd exp_kernel(const Eigen::MatrixXd& distances, double gamma) {
  return (-gamma * distances.array()).exp().matrix();
}

/// Replaces negative eigenvalues of a symmetric matrix by 0.
inline Eigen::MatrixXd clip_spectrum(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
  return (out + out.transpose()) / 2.0;
}

/// K_ij = exp(-gamma * d(v_i, v_j)) from a precomputed distance matrix.
/// gamma <= 0 (or empty) selects 1 / median off-diagonal distance.
inline KernelMatrix kernel_from_distances(const Eigen::MatrixXd& distances,
                                          std::optional<double> gamma = std::nullopt,
                                          bool spectral_clip = false) {
  if (distances.rows() == 0 || distances.rows() != distances.cols())
    throw UsageError("kernel needs a nonempty square distance matrix");
  KernelMatrix k;
  if (gamma && *gamma > 0.0) {
    k.gamma = *gamma;
  } else if (auto g = median_gamma(distances)) {
    k.gamma = *g;
  } else {
    k.gamma = 1.0;
    k.gamma_fallback = true;
  }
  k.values = exp_kernel(distances, k.gamma);
  if (spectral_clip) k.values = clip_spectrum(k.values);
  return k;
}

inline KernelMatrix kernel_matrix(const std::vector<LifetimeVector>& vectors,
                                  std::optional<double> gamma = std::nullopt,
                                  bool spectral_clip = false) {
  if (vectors.empty()) throw UsageError("kernel matrix of an empty vector list");
  return kernel_from_distances(pairwise_distances(vectors), gamma, spectral_clip);
}

// ---------------------------------------------------------------------------
// Vector store: magic "NTV1", u64 universe fingerprint, u64 count, then per
// vector: u32 owner length, owner, u64 nnz, (u32 dim, f64 value) records.

inline void save_vectors(const std::vector<LifetimeVector>& vs, const std::string& path) {
  std::string buf = "NTV1";
  detail::put_le(buf, std::uint64_t(vs.empty() ? 0 : vs.front().universe));
  detail::put_le(buf, std::uint64_t(vs.size()));
  for (const auto& v : vs) {
    detail::put_le(buf, std::uint32_t(v.owner.size()));
    buf += v.owner;
    detail::put_le(buf, std::uint64_t(v.nnz()));
    for (std::size_t i = 0; i < v.nnz(); ++i) {
      detail::put_le(buf, v.dims[i]);
      detail::put_le(buf, v.values[i]);
    }
  }
  detail::dump(path, buf);
}

inline std::vector<LifetimeVector> load_vectors(const std::string& path) {
  detail::ByteReader r(detail::slurp(path), path);
  r.expect_magic("NTV1");
  const auto universe = r.get<std::uint64_t>();
  std::vector<LifetimeVector> vs(r.get<std::uint64_t>());
  for (auto& v : vs) {
    v.universe = universe;
    v.owner = r.get_bytes(r.get<std::uint32_t>());
    const auto n = r.get<std::uint64_t>();
    v.dims.resize(n);
    v.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      v.dims[i] = r.get<std::uint32_t>();
      v.values[i] = r.get<double>();
    }
  }
  if (!r.at_end()) throw FormatError(path + ": trailing bytes");
  return vs;
}

}  // namespace nntopo
