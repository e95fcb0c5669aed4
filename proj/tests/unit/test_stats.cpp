#include <gtest/gtest.h>

#include "nntopo/stats.hpp"

using namespace nntopo;

TEST(Ranks, TiesShareTheMeanPosition) {
  EXPECT_EQ(average_ranks({10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
}

TEST(Spearman, MonotoneIsOne) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {1, 8, 27, 64, 125};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-15);
  EXPECT_NEAR(spearman(a, {5, 4, 3, 2, 1}), -1.0, 1e-15);
}

TEST(Spearman, WithTies) {
  // Ranks {1.5, 1.5, 3, 4} against {1, 2, 3, 4}.
  const double r = spearman({1, 1, 2, 3}, {1, 2, 3, 4});
  EXPECT_NEAR(r, 0.9486832980505138, 1e-12);
}

TEST(Pearson, ConstantSampleGivesZeroAndShortSampleThrows) {
  EXPECT_EQ(pearson({1, 1, 1}, {1, 2, 3}), 0.0);
  EXPECT_THROW(pearson({1}, {1}), UsageError);
  EXPECT_THROW(pearson({1, 2}, {1, 2, 3}), UsageError);
}
