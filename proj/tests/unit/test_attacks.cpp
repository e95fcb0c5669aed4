#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace nntopo;
using namespace testing_helpers;

namespace {

struct Linear {
  NetworkSpec spec{{3}, {Dense{3, 2, Activation::identity}}};
  NetworkWeights w;
  Linear() { w.layers.push_back({Tensor({2, 3}, {1.0, -2.0, 0.5, -1.0, 1.0, 0.5}), Tensor({2}, {0.6, 0.0})}); }
};

}  // namespace

TEST(Pgd, LinearModelStepsAlongRunnerUpMinusTrue) {
  Linear m;
  const auto x = vec({0.5, 0.5, 0.5});
  ASSERT_EQ(predict(m.spec, m.w, x), 0);
  const auto r = pgd_attack(m.spec, m.w, x, 0, {0.1, 0.01, 1, false});
  // w_runner - w_true = {-2, 3, 0}
  EXPECT_NEAR(r.adversarial_image.data[0], 0.49, 1e-15);
  EXPECT_NEAR(r.adversarial_image.data[1], 0.51, 1e-15);
  EXPECT_EQ(r.adversarial_image.data[2], 0.5);
  EXPECT_EQ(r.iterations, 1u);
}

TEST(Pgd, LinearModelIsFlippedWithinBudget) {
  Linear m;
  const auto x = vec({0.5, 0.5, 0.5});
  const auto r = pgd_attack(m.spec, m.w, x, 0, {0.1, 0.01, 40, true});
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.predicted_class, 1);
  EXPECT_EQ(r.clean_prediction, 0);
  EXPECT_LE(r.perturbation_linf, 0.1 + 1e-12);
  EXPECT_LT(r.iterations, 40u);
}

TEST(Pgd, ZeroEpsilonLeavesImageUnchanged) {
  Linear m;
  const auto x = vec({0.5, 0.5, 0.5});
  const auto r = pgd_attack(m.spec, m.w, x, 0, {0.0, 0.01, 10, true});
  EXPECT_EQ(r.adversarial_image, x);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.perturbation_linf, 0.0);
  EXPECT_THROW(pgd_attack(m.spec, m.w, x, 0, {-0.1, 0.01, 10, true}), UsageError);
  EXPECT_THROW(pgd_attack(m.spec, m.w, x, 0, {0.1, 0.0, 10, true}), UsageError);
}

TEST(Pgd, RespectsBallAndPixelRange) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto spec = random_small_spec(rng);
    const auto w = random_weights(spec, rng);
    const auto x = random_tensor(spec.input_shape, rng);
    const double eps = 0.05 + 0.1 * double(t % 3);
    const auto r = pgd_attack(spec, w, x, int(rng() % spec.num_classes()), {eps, 0.02, 30, t % 2 == 0});
    EXPECT_LE(linf_distance(r.adversarial_image, x), eps + 1e-12);
    for (double v : r.adversarial_image.data) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(r.success, r.predicted_class != r.clean_prediction);
    EXPECT_EQ(r.predicted_class, predict(spec, w, r.adversarial_image));
  }
}

TEST(Pgd, Deterministic) {
  std::mt19937_64 rng(22);
  const auto spec = random_small_spec(rng);
  const auto w = random_weights(spec, rng);
  const auto x = random_tensor(spec.input_shape, rng);
  const auto a = pgd_attack(spec, w, x, 1, PgdOptions::desk());
  const auto b = pgd_attack(spec, w, x, 1, PgdOptions::desk());
  EXPECT_EQ(a.adversarial_image, b.adversarial_image);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(MatchedNoise, PreClipNormMatchesAdversary) {
  std::mt19937_64 rng(23);
  AdversarialRecord adv;
  adv.original_image = random_tensor({1, 8, 8}, rng);
  adv.adversarial_image = adv.original_image;
  for (std::size_t i = 0; i < 10; ++i) adv.adversarial_image.data[i] = std::clamp(adv.original_image.data[i] + 0.1, 0.0, 1.0);
  const auto p = matched_random_perturbation(adv.original_image, adv, 5);
  EXPECT_NEAR(p.pre_clip_norm, p.target_norm, 1e-12 * p.target_norm);
  EXPECT_LE(p.achieved_norm, p.pre_clip_norm + 1e-12);
  for (double v : p.image.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_EQ(matched_random_perturbation(adv.original_image, adv, 5).image, p.image);
  EXPECT_NE(matched_random_perturbation(adv.original_image, adv, 6).image, p.image);
}

TEST(MatchedNoise, MidGrayImageIsNotClipped) {
  AdversarialRecord adv;
  adv.original_image = Tensor({1, 4, 4}, 0.5);
  adv.adversarial_image = adv.original_image;
  adv.adversarial_image.data[3] = 0.55;
  const auto p = matched_random_perturbation(adv.original_image, adv, 1);
  EXPECT_NEAR(p.achieved_norm, 0.05, 1e-12);
}

TEST(MatchedNoise, ZeroNormIsUsageError) {
  AdversarialRecord adv;
  adv.original_image = Tensor({4}, 0.5);
  adv.adversarial_image = adv.original_image;
  EXPECT_THROW(matched_random_perturbation(adv.original_image, adv, 1), UsageError);
}

TEST(Adversary, JsonRoundTrip) {
  Linear m;
  const auto r = pgd_attack(m.spec, m.w, vec({0.5, 0.5, 0.5}), 0, PgdOptions::desk(), "item-7");
  const auto back = adversary_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.original_id, "item-7");
  EXPECT_EQ(back.adversarial_image, r.adversarial_image);
  EXPECT_EQ(back.original_image, r.original_image);
  EXPECT_EQ(back.success, r.success);
  EXPECT_EQ(back.perturbation_l2, r.perturbation_l2);
  EXPECT_THROW(adversary_from_json(nlohmann::json::object()), FormatError);
}
