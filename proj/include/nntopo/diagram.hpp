#pragma once

// Persistence diagrams on the weight scale (birth >= death) and the
// q-Wasserstein / bottleneck distances between them. Ground distance is L-inf
// and any point may instead be matched to its diagonal projection.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nntopo/assignment.hpp"
#include "nntopo/error.hpp"
#include "nntopo/persistence.hpp"

namespace nntopo {

struct DiagramPoint {
  double birth = 0.0;
  double death = 0.0;
  double persistence() const noexcept { return std::fabs(birth - death); }
  friend bool operator==(const DiagramPoint&, const DiagramPoint&) = default;
};

struct Diagram {
  std::vector<DiagramPoint> points;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  friend bool operator==(const Diagram&, const Diagram&) = default;
};

/// One point per pair; infinite pairs enter with death weight 0.
inline Diagram to_diagram(const PersistenceResult& r) {
  Diagram d;
  d.points.reserve(r.pairs.size());
  for (const auto& p : r.pairs) d.points.push_back({p.birth_weight, p.death_weight});
  return d;
}

/// The k most persistent points (stable order among ties); all if k == 0.
inline Diagram truncate_top_k(const Diagram& d, std::size_t k) {
  if (k == 0 || d.size() <= k) return d;
  Diagram out = d;
  std::stable_sort(out.points.begin(), out.points.end(),
                   [](const auto& a, const auto& b) { return a.persistence() > b.persistence(); });
  out.points.resize(k);
  return out;
}

inline double linf(const DiagramPoint& a, const DiagramPoint& b) {
  return std::max(std::fabs(a.birth - b.birth), std::fabs(a.death - b.death));
}

/// L-inf distance from a point to its projection ((b+d)/2, (b+d)/2).
inline double diagonal_distance(const DiagramPoint& a) { return std::fabs(a.birth - a.death) / 2.0; }

namespace detail {

// Square (|A|+|B|) cost matrix. Rows: A points, then one diagonal slot per B
// point. Columns: B points, then one diagonal slot per A point. A point may
// take any diagonal slot of its own side at its projection cost; slot-to-slot
// costs 0.
inline std::vector<double> augmented_costs(const Diagram& a, const Diagram& b,
                                           const std::function<double(double)>& f) {
  const std::size_t na = a.size(), nb = b.size(), n = na + nb;
  std::vector<double> c(n * n, 0.0);
  for (std::size_t i = 0; i < na; ++i) {
    const double to_diag = f(diagonal_distance(a.points[i]));
    for (std::size_t j = 0; j < nb; ++j) c[i * n + j] = f(linf(a.points[i], b.points[j]));
    for (std::size_t j = nb; j < n; ++j) c[i * n + j] = to_diag;
  }
  for (std::size_t i = na; i < n; ++i)
    for (std::size_t j = 0; j < nb; ++j) c[i * n + j] = f(diagonal_distance(b.points[j]));
  return c;
}

}  // namespace detail

/// W_q(A, B) = (min over matchings of sum ||u - nu(u)||_inf^q)^(1/q),
/// exact via optimal assignment.
inline double wasserstein(const Diagram& a, const Diagram& b, double q = 2.0) {
  if (!(q >= 1.0) || std::isinf(q)) throw UsageError("Wasserstein order q must be a finite value >= 1");
  const std::size_t n = a.size() + b.size();
  if (n == 0) return 0.0;
  const auto costs = detail::augmented_costs(a, b, [q](double d) { return std::pow(d, q); });
  const double total = solve_assignment(costs, n).cost;
  return std::pow(std::max(total, 0.0), 1.0 / q);
}

namespace detail {

// Kuhn's augmenting-path search for a perfect matching in the bipartite graph
// {(i, j) : allowed(i, j)} on an n x n grid.
inline bool has_perfect_matching(std::size_t n, const std::vector<char>& allowed) {
  std::vector<std::size_t> match_col(n, n);
  std::vector<char> visited(n);
  std::function<bool(std::size_t)> augment = [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!allowed[i * n + j] || visited[j]) continue;
      visited[j] = 1;
      if (match_col[j] == n || augment(match_col[j])) {
        match_col[j] = i;
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(visited.begin(), visited.end(), 0);
    if (!augment(i)) return false;
  }
  return true;
}

}  // namespace detail

/// Bottleneck distance: the smallest t such that a matching exists whose
/// every matched pair (or diagonal projection) lies within L-inf distance t.
/// Binary search over the finite set of candidate distances.
inline double bottleneck(const Diagram& a, const Diagram& b) {
  const std::size_t n = a.size() + b.size();
  if (n == 0) return 0.0;
  const auto costs = detail::augmented_costs(a, b, [](double d) { return d; });
  std::vector<double> candidates(costs);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::size_t lo = 0, hi = candidates.size() - 1;  // answer lies in candidates[lo..hi]
  std::vector<char> allowed(n * n);
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    for (std::size_t k = 0; k < n * n; ++k) allowed[k] = costs[k] <= candidates[mid];
    if (detail::has_perfect_matching(n, allowed)) hi = mid;
    else lo = mid + 1;
  }
  return candidates[lo];
}

// ---------------------------------------------------------------------------
// CSV: header "birth,death", one point per line, shortest round-trip decimal.

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError(what + ": not a number '" + s + "'");
  return v;
}

inline void save_diagram_csv(const Diagram& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "birth,death\n";
  for (const auto& p : d.points) out << format_double(p.birth) << ',' << format_double(p.death) << '\n';
}

inline Diagram load_diagram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "birth,death") throw FormatError(path + ": missing header");
  Diagram d;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError(path + ": malformed row '" + line + "'");
    d.points.push_back({parse_double(line.substr(0, comma), path),
                        parse_double(line.substr(comma + 1), path)});
  }
  return d;
}

}  // namespace nntopo
