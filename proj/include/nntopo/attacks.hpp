#pragma once

// L-inf projected gradient descent adversaries and the norm-matched Gaussian
// control perturbation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "json.hpp"

#include "nntopo/error.hpp"
#include "nntopo/nn.hpp"
#include "nntopo/tensor.hpp"

namespace nntopo {

struct PgdOptions {
  double epsilon = 0.1;
  double step = 0.01;
  std::size_t iterations = 40;
  bool early_stop = true;

  /// Values quoted for the original experiments (step larger than the ball).
  static PgdOptions reference() { return {0.001, 0.01, 40, true}; }
  /// Desk-scale default with a usable success rate on MNIST-sized models.
  static PgdOptions desk() { return {0.1, 0.01, 40, true}; }
};

struct AdversarialRecord {
  std::string original_id;
  int original_label = -1;
  int clean_prediction = -1;
  Tensor original_image;
  Tensor adversarial_image;
  int predicted_class = -1;
  double perturbation_linf = 0.0;
  double perturbation_l2 = 0.0;
  std::size_t iterations = 0;
  bool success = false;  // predicted_class != clean_prediction
};

inline double linf_distance(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

inline double l2_distance(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
  return std::sqrt(s);
}

/// Untargeted PGD from the clean image (no random start):
///   x <- clip_[0,1]( proj_{||x - x0||_inf <= eps}( x + step * sign(grad_x loss) ) ).
/// Stops after the first iterate whose prediction differs from the clean one
/// when early_stop is set.
inline AdversarialRecord pgd_attack(const NetworkSpec& spec, const NetworkWeights& weights,
                                    const Tensor& image, int label, const PgdOptions& opt,
                                    std::string id = {}) {
  if (!(opt.epsilon >= 0.0) || !(opt.step > 0.0) || opt.iterations == 0)
    throw UsageError("PGD needs epsilon >= 0, step > 0 and at least one iteration");
  AdversarialRecord rec;
  rec.original_id = std::move(id);
  rec.original_label = label;
  rec.original_image = image;
  rec.clean_prediction = predict(spec, weights, image);

  Tensor x = image;
  int pred = rec.clean_prediction;
  std::size_t it = 0;
  while (it < opt.iterations) {
    const auto lg = loss_and_gradients(spec, weights, x, label);
    if (!lg.input_grad.all_finite()) throw NumericError("non-finite input gradient in PGD");
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double g = lg.input_grad.data[i];
      const double s = g > 0 ? 1.0 : (g < 0 ? -1.0 : 0.0);
      const double lo = std::max(0.0, image.data[i] - opt.epsilon);
      const double hi = std::min(1.0, image.data[i] + opt.epsilon);
      x.data[i] = std::clamp(x.data[i] + opt.step * s, lo, hi);
    }
    ++it;
    pred = predict(spec, weights, x);
    if (opt.early_stop && pred != rec.clean_prediction) break;
  }
  rec.adversarial_image = std::move(x);
  rec.predicted_class = pred;
  rec.iterations = it;
  rec.success = pred != rec.clean_prediction;
  rec.perturbation_linf = linf_distance(rec.adversarial_image, image);
  rec.perturbation_l2 = l2_distance(rec.adversarial_image, image);
  return rec;
}

struct MatchedPerturbation {
  Tensor image;
  double target_norm = 0.0;    // ||adv - orig||_2
  double pre_clip_norm = 0.0;  // norm of the scaled noise
  double achieved_norm = 0.0;  // ||perturbed - orig||_2 after clipping
};

/// Gaussian noise rescaled to the adversarial perturbation's L2 norm, added
/// to the clean image and clipped to [0,1].
inline MatchedPerturbation matched_random_perturbation(const Tensor& image, const AdversarialRecord& adv,
                                                       std::uint64_t seed) {
  MatchedPerturbation out;
  out.target_norm = l2_distance(adv.adversarial_image, adv.original_image);
  if (!(out.target_norm > 0.0)) throw UsageError("adversarial perturbation has zero norm");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(image.size());
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : noise) {
      v = normal(rng);
      norm += v * v;
    }
    norm = std::sqrt(norm);
  } while (!(norm > 0.0));
  const double scale = out.target_norm / norm;
  out.image = image;
  double pre = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = noise[i] * scale;
    pre += d * d;
    out.image.data[i] = std::clamp(image.data[i] + d, 0.0, 1.0);
  }
  out.pre_clip_norm = std::sqrt(pre);
  out.achieved_norm = l2_distance(out.image, image);
  return out;
}

inline nlohmann::json to_json(const AdversarialRecord& r) {
  return {{"format", "nntopo-adversary/1"},
          {"original_id", r.original_id},
          {"original_label", r.original_label},
          {"clean_prediction", r.clean_prediction},
          {"predicted_class", r.predicted_class},
          {"perturbation_linf", r.perturbation_linf},
          {"perturbation_l2", r.perturbation_l2},
          {"iterations", r.iterations},
          {"success", r.success},
          {"shape", r.original_image.shape},
          {"original_image", r.original_image.data},
          {"adversarial_image", r.adversarial_image.data}};
}

inline AdversarialRecord adversary_from_json(const nlohmann::json& j) {
  try {
    AdversarialRecord r;
    r.original_id = j.at("original_id");
    r.original_label = j.at("original_label");
    r.clean_prediction = j.at("clean_prediction");
    r.predicted_class = j.at("predicted_class");
    r.perturbation_linf = j.at("perturbation_linf");
    r.perturbation_l2 = j.at("perturbation_l2");
    r.iterations = j.at("iterations");
    r.success = j.at("success");
    const auto shape = j.at("shape").get<Shape>();
    r.original_image = Tensor(shape, j.at("original_image").get<std::vector<double>>());
    r.adversarial_image = Tensor(shape, j.at("adversarial_image").get<std::vector<double>>());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed adversary record: ") + e.what());
  }
}

}  // namespace nntopo
