#pragma once

// Zero-dimensional persistent homology of an induced graph under the
// descending-weight edge filtration, with generator subgraphs.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nntopo/error.hpp"
#include "nntopo/graph.hpp"

namespace nntopo {

struct FiltrationEntry {
  std::uint32_t edge = 0;  // index into InducedGraph::edges
  std::uint32_t u = 0;     // global vertex id of the source node
  std::uint32_t v = 0;     // global vertex id of the target node
  double weight = 0.0;
};

/// Edges in insertion order: phi descending, ties broken by
/// (source layer, source index, target index) ascending.
struct Filtration {
  std::vector<FiltrationEntry> entries;
  std::vector<std::size_t> layer_offsets;  // global vertex id = offset[layer] + index
  std::string input_id;

  std::size_t size() const noexcept { return entries.size(); }
  std::size_t vertex_count() const { return layer_offsets.empty() ? 0 : layer_offsets.back(); }

  NodeId node(std::uint32_t vertex) const {
    const auto it = std::upper_bound(layer_offsets.begin(), layer_offsets.end(), std::size_t(vertex));
    const auto layer = std::size_t(it - layer_offsets.begin()) - 1;
    return {std::uint32_t(layer), std::uint32_t(vertex - layer_offsets[layer])};
  }
};

inline Filtration build_filtration(const InducedGraph& graph) {
  if (graph.edges.size() >= std::numeric_limits<std::uint32_t>::max() ||
      graph.node_count() >= std::numeric_limits<std::uint32_t>::max())
    throw UsageError("graph too large for 32-bit edge/vertex ids");
  Filtration f;
  f.input_id = graph.input_id;
  f.layer_offsets = graph.layer_offsets();

  std::vector<std::uint32_t> order(graph.edges.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    const auto& x = graph.edges[a];
    const auto& y = graph.edges[b];
    if (x.phi != y.phi) return x.phi > y.phi;
    if (x.source.layer != y.source.layer) return x.source.layer < y.source.layer;
    if (x.source.index != y.source.index) return x.source.index < y.source.index;
    return x.target.index < y.target.index;
  });

  f.entries.reserve(order.size());
  for (auto idx : order) {
    const auto& e = graph.edges[idx];
    f.entries.push_back({idx, std::uint32_t(f.layer_offsets[e.source.layer] + e.source.index),
                         std::uint32_t(f.layer_offsets[e.target.layer] + e.target.index), e.phi});
  }
  return f;
}

inline constexpr std::size_t kInfiniteIndex = std::numeric_limits<std::size_t>::max();

struct PersistencePair {
  std::size_t generator_id = 0;
  std::size_t birth_index = 0;
  std::size_t death_index = kInfiniteIndex;
  double birth_weight = 0.0;
  double death_weight = 0.0;  // 0 for infinite pairs
  double lifetime = 0.0;      // birth_weight - death_weight

  bool infinite() const noexcept { return death_index == kInfiniteIndex; }

  /// Lifetime on the filtration-index scale (j - i); empty for infinite pairs.
  std::optional<std::size_t> index_lifetime() const {
    if (infinite()) return std::nullopt;
    return death_index - birth_index;
  }

  friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

/// Representative subgraph of one 0-dimensional class. `edges` are the
/// filtration edges assigned to the class (its birth edge, the edges that
/// grew its component while it was the oldest class there, cycle edges and
/// merge edges it survived); `vertices` are their endpoints. The full
/// component is this subgraph together with the subgraphs of `absorbed`
/// generators, recursively.
struct GeneratorSubgraph {
  std::size_t generator_id = 0;
  std::vector<NodeId> vertices;
  std::vector<std::uint32_t> edges;  // indices into InducedGraph::edges
  std::vector<std::size_t> absorbed;
  PersistencePair pair;

  friend bool operator==(const GeneratorSubgraph&, const GeneratorSubgraph&) = default;
};

struct PersistenceResult {
  std::vector<PersistencePair> pairs;  // pairs[k].generator_id == k
  std::vector<GeneratorSubgraph> generators;
  std::string input_id;
  std::size_t edge_count = 0;

  std::size_t infinite_count() const {
    return std::size_t(std::count_if(pairs.begin(), pairs.end(),
                                     [](const auto& p) { return p.infinite(); }));
  }

  std::size_t generator_edge_count() const {
    std::size_t n = 0;
    for (const auto& g : generators) n += g.edges.size();
    return n;
  }

  friend bool operator==(const PersistenceResult&, const PersistenceResult&) = default;
};

namespace detail {

struct NoObserver {
  void operator()(std::size_t, double, std::size_t) const noexcept {}
};

}  // namespace detail

/// Union-find sweep over the filtration. The elder rule decides merges: the
/// class born earlier survives (smaller generator id on a tie), the younger
/// one dies at the merge edge, and the merge edge goes to the survivor.
/// Classes alive at the end are infinite with death weight 0.
///
/// `observer(index, weight, live_components)` runs after every insertion.
template <class Observer = detail::NoObserver>
PersistenceResult compute_persistence(const Filtration& filtration, Observer&& observer = {}) {
  constexpr std::uint32_t kAbsent = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> parent(filtration.vertex_count(), kAbsent);
  std::vector<std::uint32_t> root_generator(filtration.vertex_count(), kAbsent);

  auto find = [&](std::uint32_t x) {
    std::uint32_t r = x;
    while (parent[r] != r) r = parent[r];
    while (parent[x] != r) {
      const std::uint32_t next = parent[x];
      parent[x] = r;
      x = next;
    }
    return r;
  };

  PersistenceResult result;
  result.input_id = filtration.input_id;
  result.edge_count = filtration.size();
  auto& gens = result.generators;
  std::size_t live = 0;

  for (std::size_t i = 0; i < filtration.size(); ++i) {
    const auto& e = filtration.entries[i];
    const bool u_new = parent[e.u] == kAbsent;
    const bool v_new = parent[e.v] == kAbsent;
    std::uint32_t owner;
    if (u_new && v_new) {
      owner = std::uint32_t(gens.size());
      GeneratorSubgraph g;
      g.generator_id = owner;
      g.pair.generator_id = owner;
      g.pair.birth_index = i;
      g.pair.birth_weight = e.weight;
      gens.push_back(std::move(g));
      parent[e.u] = e.u;
      parent[e.v] = e.u;
      root_generator[e.u] = owner;
      ++live;
    } else if (u_new || v_new) {
      const std::uint32_t existing = u_new ? e.v : e.u;
      const std::uint32_t fresh = u_new ? e.u : e.v;
      const std::uint32_t r = find(existing);
      parent[fresh] = r;
      owner = root_generator[r];
    } else {
      const std::uint32_t ru = find(e.u);
      const std::uint32_t rv = find(e.v);
      if (ru == rv) {
        owner = root_generator[ru];
      } else {
        const std::uint32_t gu = root_generator[ru];
        const std::uint32_t gv = root_generator[rv];
        const auto& pu = gens[gu].pair;
        const auto& pv = gens[gv].pair;
        const bool u_elder = pu.birth_index != pv.birth_index ? pu.birth_index < pv.birth_index : gu < gv;
        const std::uint32_t elder_root = u_elder ? ru : rv;
        const std::uint32_t young_root = u_elder ? rv : ru;
        const std::uint32_t young = root_generator[young_root];
        owner = root_generator[elder_root];
        auto& dying = gens[young].pair;
        dying.death_index = i;
        dying.death_weight = e.weight;
        parent[young_root] = elder_root;
        gens[owner].absorbed.push_back(young);
        --live;
      }
    }
    gens[owner].edges.push_back(e.edge);
    gens[owner].vertices.push_back(filtration.node(e.u));
    gens[owner].vertices.push_back(filtration.node(e.v));
    observer(i, e.weight, live);
  }

  for (auto& g : gens) {
    if (g.pair.infinite()) g.pair.death_weight = 0.0;
    g.pair.lifetime = g.pair.birth_weight - g.pair.death_weight;
    std::sort(g.vertices.begin(), g.vertices.end());
    g.vertices.erase(std::unique(g.vertices.begin(), g.vertices.end()), g.vertices.end());
    result.pairs.push_back(g.pair);
  }
  return result;
}

inline PersistenceResult compute_persistence(const InducedGraph& graph) {
  return compute_persistence(build_filtration(graph));
}

/// Number of connected components of the subgraph made of edges with
/// weight >= threshold (and their endpoints), by breadth-first flood fill.
inline std::size_t betti0_at(const Filtration& filtration, double threshold) {
  const std::size_t n = filtration.vertex_count();
  std::vector<std::vector<std::uint32_t>> adj(n);
  std::vector<char> present(n, 0);
  for (const auto& e : filtration.entries) {
    if (!(e.weight >= threshold)) continue;
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
    present[e.u] = present[e.v] = 1;
  }
  std::vector<char> seen(n, 0);
  std::vector<std::uint32_t> queue;
  std::size_t components = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    if (!present[s] || seen[s]) continue;
    ++components;
    queue.assign(1, s);
    seen[s] = 1;
    while (!queue.empty()) {
      const auto x = queue.back();
      queue.pop_back();
      for (auto y : adj[x])
        if (!seen[y]) {
          seen[y] = 1;
          queue.push_back(y);
        }
    }
  }
  return components;
}

// ---------------------------------------------------------------------------
// Binary serialization: magic "NTP1", little-endian.
//   u32 id length, id, u64 edge count, u64 generator count, then per
//   generator: f64 birth weight, f64 death weight, u64 birth index,
//   u64 death index (all ones = infinite), u64 #edges, u32 edge indices,
//   u64 #vertices, (u32 layer, u32 index) pairs, u64 #absorbed, u64 ids.

inline std::string serialize_persistence(const PersistenceResult& r) {
  std::string buf = "NTP1";
  detail::put_le(buf, std::uint32_t(r.input_id.size()));
  buf += r.input_id;
  detail::put_le(buf, std::uint64_t(r.edge_count));
  detail::put_le(buf, std::uint64_t(r.generators.size()));
  for (const auto& g : r.generators) {
    detail::put_le(buf, g.pair.birth_weight);
    detail::put_le(buf, g.pair.death_weight);
    detail::put_le(buf, std::uint64_t(g.pair.birth_index));
    detail::put_le(buf, std::uint64_t(g.pair.death_index));
    detail::put_le(buf, std::uint64_t(g.edges.size()));
    for (auto e : g.edges) detail::put_le(buf, e);
    detail::put_le(buf, std::uint64_t(g.vertices.size()));
    for (const auto& v : g.vertices) {
      detail::put_le(buf, v.layer);
      detail::put_le(buf, v.index);
    }
    detail::put_le(buf, std::uint64_t(g.absorbed.size()));
    for (auto a : g.absorbed) detail::put_le(buf, std::uint64_t(a));
  }
  return buf;
}

inline PersistenceResult deserialize_persistence(std::string bytes,
                                                 const std::string& what = "persistence") {
  detail::ByteReader r(std::move(bytes), what);
  r.expect_magic("NTP1");
  PersistenceResult out;
  out.input_id = r.get_bytes(r.get<std::uint32_t>());
  out.edge_count = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < n; ++k) {
    GeneratorSubgraph g;
    g.generator_id = k;
    g.pair.generator_id = k;
    g.pair.birth_weight = r.get<double>();
    g.pair.death_weight = r.get<double>();
    g.pair.birth_index = r.get<std::uint64_t>();
    g.pair.death_index = r.get<std::uint64_t>();
    g.pair.lifetime = g.pair.birth_weight - g.pair.death_weight;
    g.edges.resize(r.get<std::uint64_t>());
    for (auto& e : g.edges) e = r.get<std::uint32_t>();
    g.vertices.resize(r.get<std::uint64_t>());
    for (auto& v : g.vertices) {
      v.layer = r.get<std::uint32_t>();
      v.index = r.get<std::uint32_t>();
    }
    g.absorbed.resize(r.get<std::uint64_t>());
    for (auto& a : g.absorbed) a = r.get<std::uint64_t>();
    out.pairs.push_back(g.pair);
    out.generators.push_back(std::move(g));
  }
  if (!r.at_end()) throw FormatError(what + ": trailing bytes");
  return out;
}

inline void save_persistence(const PersistenceResult& r, const std::string& path) {
  detail::dump(path, serialize_persistence(r));
}

inline PersistenceResult load_persistence(const std::string& path) {
  return deserialize_persistence(detail::slurp(path), path);
}

}  // namespace nntopo
