#pragma once

// Kernel SVM trained by sequential minimal optimization (second-order
// working-set selection), one-vs-one multiclass voting, stratified k-fold
// cross-validation and k-nearest-neighbour prediction. All routines take
// precomputed kernel / distance matrices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "nntopo/error.hpp"
#include "nntopo/subgraph.hpp"

namespace nntopo {

struct SmoOptions {
  double C = 1.0;
  double tolerance = 1e-3;         // stop when the maximal KKT violation drops below this
  std::size_t max_passes = 10000;  // iteration cap = max_passes * n
};

struct BinarySvmModel {
  std::vector<std::size_t> support;  // indices into the training set
  std::vector<double> alpha;         // alpha of each support vector, in (0, C]
  std::vector<int> label;            // y of each support vector, +-1
  double bias = 0.0;
  double C = 1.0;
  double kkt_gap = 0.0;  // maximal violating pair gap at exit
  std::size_t iterations = 0;
  bool converged = true;

  /// f(x) = sum_s alpha_s y_s K(x, s) + b, given K(x, .) over the training set.
  template <class Row>
  double decision(const Row& kernel_row) const {
    double f = bias;
    for (std::size_t s = 0; s < support.size(); ++s)
      f += alpha[s] * double(label[s]) * kernel_row[support[s]];
    return f;
  }
};

/// Trains a C-SVM on a symmetric kernel matrix with labels in {-1, +1}.
/// Deterministic: ties in working-set selection go to the lowest index.
inline BinarySvmModel svm_train_binary(const Eigen::MatrixXd& K, const std::vector<int>& y,
                                       const SmoOptions& opt = {}) {
  const std::size_t n = y.size();
  if (K.rows() != Eigen::Index(n) || K.cols() != Eigen::Index(n))
    throw UsageError("kernel matrix must be n x n for n labels");
  if (!(opt.C > 0.0)) throw UsageError("SVM C must be > 0");
  for (int v : y)
    if (v != 1 && v != -1) throw UsageError("binary SVM labels must be +1 or -1");
  for (Eigen::Index i = 0; i < K.rows(); ++i)
    for (Eigen::Index j = i + 1; j < K.cols(); ++j)
      if (std::fabs(K(i, j) - K(j, i)) > 1e-9 * std::max(1.0, std::fabs(K(i, j))))
        throw UsageError("kernel matrix is not symmetric");

  BinarySvmModel model;
  model.C = opt.C;
  if (n == 0) return model;
  if (std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; })) {
    // sum alpha_i y_i = 0 forces alpha = 0; the decision is the constant class.
    model.bias = double(y[0]);
    return model;
  }

  const double C = opt.C;
  constexpr double tau = 1e-12;
  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  auto Q = [&](std::size_t i, std::size_t j) { return double(y[i] * y[j]) * K(Eigen::Index(i), Eigen::Index(j)); };
  auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C); };

  const std::size_t max_iter = opt.max_passes * n;
  std::size_t iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t)
      if (in_up(t) && -y[t] * G[t] > gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * G[t];
      gmin = std::min(gmin, v);
      if (i == n) continue;
      const double b = gmax - v;
      if (b > 0) {
        double a = Q(i, i) + Q(t, t) - 2.0 * y[i] * y[t] * Q(i, t);
        if (a <= 0) a = tau;
        if (-(b * b) / a < best) {
          best = -(b * b) / a;
          j = t;
        }
      }
    }
    gap = gmax - gmin;
    if (i == n || j == n || gap < opt.tolerance) break;
    if (iter >= max_iter) {
      model.converged = false;
      break;
    }

    const double old_i = alpha[i], old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = Q(i, i) + Q(j, j) + 2.0 * Q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t k = 0; k < n; ++k) G[k] += Q(i, k) * di + Q(j, k) * dj;
  }
  model.iterations = iter;
  model.kkt_gap = gap;

  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] == -1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] == 1) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free ? sum_free / double(n_free) : (ub + lb) / 2.0;
  model.bias = -rho;
  for (std::size_t t = 0; t < n; ++t)
    if (alpha[t] > 0) {
      model.support.push_back(t);
      model.alpha.push_back(alpha[t]);
      model.label.push_back(y[t]);
    }
  return model;
}

/// One binary model per unordered class pair (first class is +1).
struct OvoModel {
  std::vector<int> classes;
  struct PairModel {
    int positive = 0;
    int negative = 0;
    BinarySvmModel model;  // support indices refer to the full training set
  };
  std::vector<PairModel> models;

  bool converged() const {
    return std::all_of(models.begin(), models.end(), [](const auto& m) { return m.model.converged; });
  }
};

/// `required_classes`, when given, must all occur in `labels`.
inline OvoModel ovo_train(const Eigen::MatrixXd& K, const std::vector<int>& labels,
                          const SmoOptions& opt = {}, const std::vector<int>& required_classes = {}) {
  const std::set<int> present(labels.begin(), labels.end());
  for (int c : required_classes)
    if (!present.count(c)) throw UsageError("class " + std::to_string(c) + " absent from training set");
  if (present.size() < 2) throw UsageError("one-vs-one SVM needs at least two classes");
  OvoModel out;
  out.classes.assign(present.begin(), present.end());
  for (std::size_t a = 0; a < out.classes.size(); ++a)
    for (std::size_t b = a + 1; b < out.classes.size(); ++b) {
      std::vector<std::size_t> idx;
      std::vector<int> y;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == out.classes[a]) { idx.push_back(i); y.push_back(1); }
        else if (labels[i] == out.classes[b]) { idx.push_back(i); y.push_back(-1); }
      }
      Eigen::MatrixXd sub(Eigen::Index(idx.size()), Eigen::Index(idx.size()));
      for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c)
          sub(Eigen::Index(r), Eigen::Index(c)) = K(Eigen::Index(idx[r]), Eigen::Index(idx[c]));
      auto m = svm_train_binary(sub, y, opt);
      for (auto& s : m.support) s = idx[s];
      out.models.push_back({out.classes[a], out.classes[b], std::move(m)});
    }
  return out;
}

/// Majority vote over the pairwise models. Ties go to the class with the
/// larger summed |decision| over its won comparisons, then to the lower id.
/// `K_test` rows are K(test_i, training set).
inline std::vector<int> ovo_predict(const OvoModel& model, const Eigen::MatrixXd& K_test) {
  std::vector<int> out;
  out.reserve(std::size_t(K_test.rows()));
  std::map<int, std::size_t> pos;
  for (std::size_t c = 0; c < model.classes.size(); ++c) pos[model.classes[c]] = c;
  for (Eigen::Index r = 0; r < K_test.rows(); ++r) {
    const Eigen::VectorXd row = K_test.row(r).transpose();
    std::vector<std::size_t> votes(model.classes.size(), 0);
    std::vector<double> margin(model.classes.size(), 0.0);
    for (const auto& pm : model.models) {
      const double f = pm.model.decision(row);
      const std::size_t winner = pos[f > 0 ? pm.positive : pm.negative];
      ++votes[winner];
      margin[winner] += std::fabs(f);
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
      if (votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best])) best = c;
    out.push_back(model.classes[best]);
  }
  return out;
}

inline nlohmann::json to_json(const OvoModel& m) {
  nlohmann::json j;
  j["format"] = "nntopo-ovo-svm/1";
  j["classes"] = m.classes;
  for (const auto& pm : m.models) {
    j["models"].push_back({{"positive", pm.positive},
                           {"negative", pm.negative},
                           {"support", pm.model.support},
                           {"alpha", pm.model.alpha},
                           {"label", pm.model.label},
                           {"bias", pm.model.bias},
                           {"C", pm.model.C},
                           {"kkt_gap", pm.model.kkt_gap},
                           {"iterations", pm.model.iterations},
                           {"converged", pm.model.converged}});
  }
  return j;
}

inline OvoModel ovo_from_json(const nlohmann::json& j) {
  try {
    OvoModel m;
    m.classes = j.at("classes").get<std::vector<int>>();
    for (const auto& e : j.at("models")) {
      OvoModel::PairModel pm;
      pm.positive = e.at("positive");
      pm.negative = e.at("negative");
      pm.model.support = e.at("support").get<std::vector<std::size_t>>();
      pm.model.alpha = e.at("alpha").get<std::vector<double>>();
      pm.model.label = e.at("label").get<std::vector<int>>();
      pm.model.bias = e.at("bias");
      pm.model.C = e.at("C");
      pm.model.kkt_gap = e.at("kkt_gap");
      pm.model.iterations = e.at("iterations");
      pm.model.converged = e.at("converged");
      m.models.push_back(std::move(pm));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed SVM model: ") + e.what());
  }
}

/// Labels of the k nearest references per query row (ties in distance go to
/// the lower reference index); majority vote, ties to the smallest class id.
inline std::vector<int> knn_predict(const Eigen::MatrixXd& distances, const std::vector<int>& train_labels,
                                    std::size_t k) {
  if (k == 0) throw UsageError("k must be >= 1");
  if (k > train_labels.size()) throw UsageError("k exceeds the training set size");
  if (distances.cols() != Eigen::Index(train_labels.size()))
    throw UsageError("distance rows must cover the training set");
  std::vector<int> out;
  std::vector<std::size_t> idx(train_labels.size());
  for (Eigen::Index r = 0; r < distances.rows(); ++r) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(k), idx.end(), [&](std::size_t a, std::size_t b) {
      const double da = distances(r, Eigen::Index(a)), db = distances(r, Eigen::Index(b));
      return da != db ? da < db : a < b;
    });
    std::map<int, std::size_t> votes;
    for (std::size_t t = 0; t < k; ++t) ++votes[train_labels[idx[t]]];
    int best = votes.begin()->first;
    for (const auto& [c, v] : votes)
      if (v > votes[best]) best = c;
    out.push_back(best);
  }
  return out;
}

struct CrossValidationReport {
  std::vector<double> fold_accuracy;   // completed folds only
  std::vector<std::size_t> skipped;    // folds whose training part lacked a test class
  std::vector<std::vector<std::size_t>> folds;
  double mean_accuracy = 0.0;
  bool all_converged = true;
};

struct CrossValidationOptions {
  std::size_t folds = 10;
  SmoOptions smo;
  std::optional<double> gamma;  // empty: median heuristic on each training fold
  std::uint64_t seed = 0;
};

/// Stratified assignment of items to folds: each class is shuffled with the
/// seed and dealt round-robin, continuing where the previous class stopped.
inline std::vector<std::vector<std::size_t>> stratified_folds(const std::vector<int>& labels,
                                                              std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
  if (folds > labels.size()) throw UsageError("more folds than items");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out(folds);
  std::size_t next = 0;
  for (auto& [c, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) out[next++ % folds].push_back(i);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

/// k-fold cross-validation of the one-vs-one SVM on exp(-gamma d) kernels
/// built from a precomputed distance matrix.
inline CrossValidationReport cross_validate_distances(const Eigen::MatrixXd& D, const std::vector<int>& labels,
                                                      const CrossValidationOptions& opt = {}) {
  if (D.rows() != Eigen::Index(labels.size()) || D.cols() != D.rows())
    throw UsageError("distance matrix must be n x n for n labels");
  CrossValidationReport rep;
  rep.folds = stratified_folds(labels, opt.folds, opt.seed);
  double sum = 0.0;
  for (std::size_t f = 0; f < rep.folds.size(); ++f) {
    const auto& test = rep.folds[f];
    std::vector<char> in_test(labels.size(), 0);
    for (auto i : test) in_test[i] = 1;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!in_test[i]) train.push_back(i);
    std::vector<int> train_labels;
    for (auto i : train) train_labels.push_back(labels[i]);
    const std::set<int> train_classes(train_labels.begin(), train_labels.end());
    const bool missing = std::any_of(test.begin(), test.end(),
                                     [&](std::size_t i) { return !train_classes.count(labels[i]); });
    if (missing || train_classes.size() < 2 || test.empty()) {
      rep.skipped.push_back(f);
      continue;
    }
    Eigen::MatrixXd Dtt(Eigen::Index(train.size()), Eigen::Index(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r)
      for (std::size_t c = 0; c < train.size(); ++c)
        Dtt(Eigen::Index(r), Eigen::Index(c)) = D(Eigen::Index(train[r]), Eigen::Index(train[c]));
    const auto K = kernel_from_distances(Dtt, opt.gamma);
    Eigen::MatrixXd Dq(Eigen::Index(test.size()), Eigen::Index(train.size()));
    for (std::size_t r = 0; r < test.size(); ++r)
      for (std::size_t c = 0; c < train.size(); ++c)
        Dq(Eigen::Index(r), Eigen::Index(c)) = D(Eigen::Index(test[r]), Eigen::Index(train[c]));
    const auto model = ovo_train(K.values, train_labels, opt.smo);
    rep.all_converged = rep.all_converged && model.converged();
    const auto pred = ovo_predict(model, exp_kernel(Dq, K.gamma));
    std::size_t correct = 0;
    for (std::size_t r = 0; r < test.size(); ++r) correct += pred[r] == labels[test[r]];
    rep.fold_accuracy.push_back(double(correct) / double(test.size()));
    sum += rep.fold_accuracy.back();
  }
  rep.mean_accuracy = rep.fold_accuracy.empty() ? 0.0 : sum / double(rep.fold_accuracy.size());
  return rep;
}

inline CrossValidationReport cross_validate(const std::vector<LifetimeVector>& vectors,
                                            const std::vector<int>& labels,
                                            const CrossValidationOptions& opt = {}) {
  if (vectors.size() != labels.size()) throw UsageError("one label per vector required");
  return cross_validate_distances(pairwise_distances(vectors), labels, opt);
}

}  // namespace nntopo
