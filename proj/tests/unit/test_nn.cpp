#include <gtest/gtest.h>

#include "helpers.hpp"

using namespace nntopo;
using namespace testing_helpers;

namespace {

NetworkWeights identity_dense_weights() {
  NetworkWeights w;
  w.layers.push_back({Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0})});
  return w;
}

double loss_at(const NetworkSpec& spec, const NetworkWeights& w, const Tensor& x, int label) {
  return softmax_cross_entropy(forward(spec, w, x).logits.data, label);
}

}  // namespace

TEST(Forward, IdentityDenseGivesInputAsLogits) {
  NetworkSpec spec{{2}, {Dense{2, 2, Activation::identity}}};
  const auto rec = forward(spec, identity_dense_weights(), vec({3, -1}));
  EXPECT_EQ(rec.logits.data, (std::vector<double>{3, -1}));
  EXPECT_EQ(rec.predicted_class, 0);
}

TEST(Forward, ReluClampsNegatives) {
  NetworkSpec spec{{2}, {Dense{2, 2, Activation::relu}}};
  const auto rec = forward(spec, identity_dense_weights(), vec({-5, 2}));
  EXPECT_EQ(rec.post_activation[0].data, (std::vector<double>{0, 2}));
  EXPECT_EQ(rec.logits.data, (std::vector<double>{-5, 2}));
}

TEST(Forward, ConvOfOnesSumsReceptiveField) {
  NetworkSpec spec{{1, 3, 3}, {Conv2d{1, 1, 2, 2, 1, 0, Activation::identity}}};
  NetworkWeights w;
  w.layers.push_back({Tensor({1, 1, 2, 2}, 1.0), Tensor({1}, 0.0)});
  const auto rec = forward(spec, w, Tensor({1, 3, 3}, 1.0));
  EXPECT_EQ(rec.pre_activation[0].shape, (Shape{1, 2, 2}));
  for (double v : rec.pre_activation[0].data) EXPECT_EQ(v, 4.0);
}

TEST(Forward, PaddingAndStride) {
  NetworkSpec spec{{1, 3, 3}, {Conv2d{1, 1, 3, 3, 2, 1, Activation::identity}}};
  NetworkWeights w;
  w.layers.push_back({Tensor({1, 1, 3, 3}, 1.0), Tensor({1}, 0.5)});
  const auto rec = forward(spec, w, Tensor({1, 3, 3}, 1.0));
  // Corners of the padded input see a 2x2 patch of ones.
  EXPECT_EQ(rec.pre_activation[0].data, (std::vector<double>{4.5, 4.5, 4.5, 4.5}));
}

TEST(Forward, ArgmaxTiesBreakToLowestIndex) {
  NetworkSpec spec{{2}, {Dense{2, 3, Activation::identity}}};
  NetworkWeights w;
  w.layers.push_back({Tensor({3, 2}, {1, 0, 0, 1, 1, 0}), Tensor({3}, 0.0)});
  EXPECT_EQ(forward(spec, w, vec({1, 1})).predicted_class, 0);
  EXPECT_EQ(forward(spec, w, vec({0, 1})).predicted_class, 1);
}

TEST(Forward, MaxPoolArgmaxInsideWindow) {
  std::mt19937_64 rng(3);
  NetworkSpec spec{{2, 4, 4}, {MaxPool2d{2, 2}}};
  NetworkWeights w;
  w.layers.resize(1);
  const auto x = random_tensor({2, 4, 4}, rng);
  const auto rec = forward(spec, w, x);
  ASSERT_EQ(rec.argmax[0].size(), 8u);
  for (std::size_t o = 0; o < 8; ++o) {
    const std::size_t c = o / 4, oy = (o % 4) / 2, ox = o % 2;
    const std::size_t a = rec.argmax[0][o];
    EXPECT_EQ(a / 16, c);
    EXPECT_EQ((a % 16) / 4 / 2, oy);
    EXPECT_EQ((a % 4) / 2, ox);
    EXPECT_EQ(rec.pre_activation[0].data[o], x.data[a]);
  }
}

TEST(Forward, ShapeMismatchNamesLayer) {
  NetworkSpec spec{{4}, {Dense{4, 3, Activation::relu}, Dense{2, 2, Activation::relu}}};
  try {
    spec.output_shapes();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
  NetworkSpec ok{{4}, {Dense{4, 3, Activation::relu}}};
  EXPECT_THROW(forward(ok, init_weights(ok, 1), vec({1, 2, 3})), ConfigError);
}

TEST(Forward, Deterministic) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 5; ++t) {
    const auto spec = random_small_spec(rng);
    const auto w = random_weights(spec, rng);
    const auto x = random_tensor(spec.input_shape, rng);
    EXPECT_EQ(forward(spec, w, x), forward(spec, w, x));
  }
}

TEST(Loss, UniformSoftmaxIsLn2) {
  NetworkSpec spec{{1}, {Dense{1, 2, Activation::identity}}};
  NetworkWeights w;
  w.layers.push_back({Tensor({2, 1}, 0.0), Tensor({2}, 0.0)});
  const auto lg = loss_and_gradients(spec, w, vec({0.7}), 0);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-15);
}

TEST(Loss, LabelOutOfRangeIsUsageError) {
  NetworkSpec spec{{1}, {Dense{1, 2, Activation::identity}}};
  const auto w = init_weights(spec, 1);
  EXPECT_THROW(loss_and_gradients(spec, w, vec({0.7}), 2), UsageError);
  EXPECT_THROW(loss_and_gradients(spec, w, vec({0.7}), -1), UsageError);
}

TEST(Loss, LargeLogitsStayFinite) {
  NetworkSpec spec{{1}, {Dense{1, 2, Activation::identity}}};
  NetworkWeights w;
  w.layers.push_back({Tensor({2, 1}, {1000.0, -1000.0}), Tensor({2}, 0.0)});
  const auto lg = loss_and_gradients(spec, w, vec({1.0}), 1);
  EXPECT_NEAR(lg.loss, 2000.0, 1e-9);
}

// Finite-difference oracle: 20 random networks, every weight, bias and input
// gradient entry, central differences with h = 1e-6.
TEST(Gradients, MatchCentralFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const double h = 1e-6;
  for (int net = 0; net < 20; ++net) {
    const auto spec = random_small_spec(rng);
    auto w = random_weights(spec, rng);
    ASSERT_LE(w.parameter_count(), 50u);
    const auto x = random_tensor(spec.input_shape, rng, 0.05, 0.95);
    const int label = int(rng() % spec.num_classes());
    const auto lg = loss_and_gradients(spec, w, x, label);

    double worst = 0.0;
    for (std::size_t l = 0; l < w.layers.size(); ++l)
      for (Tensor* t : {&w.layers[l].weight, &w.layers[l].bias}) {
        const bool is_weight = t == &w.layers[l].weight;
        for (std::size_t i = 0; i < t->size(); ++i) {
          const double keep = t->data[i];
          t->data[i] = keep + h;
          const double up = loss_at(spec, w, x, label);
          t->data[i] = keep - h;
          const double down = loss_at(spec, w, x, label);
          t->data[i] = keep;
          const double numeric = (up - down) / (2 * h);
          const double analytic = is_weight ? lg.weight_grads.layers[l].weight.data[i]
                                            : lg.weight_grads.layers[l].bias.data[i];
          worst = std::max(worst, relative_error(analytic, numeric));
        }
      }
    Tensor xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp.data[i] = x.data[i] + h;
      const double up = loss_at(spec, w, xp, label);
      xp.data[i] = x.data[i] - h;
      const double down = loss_at(spec, w, xp, label);
      xp.data[i] = x.data[i];
      worst = std::max(worst, relative_error(lg.input_grad.data[i], (up - down) / (2 * h)));
    }
    EXPECT_LT(worst, 1e-5) << "network " << net;
  }
}

TEST(Gradients, MaxPoolRoutesOnlyThroughArgmax) {
  std::mt19937_64 rng(9);
  NetworkSpec spec{{1, 4, 4}, {MaxPool2d{2, 2}, Flatten{}, Dense{4, 2, Activation::identity}}};
  const auto w = random_weights(spec, rng);
  const auto x = random_tensor({1, 4, 4}, rng);
  const auto lg = loss_and_gradients(spec, w, x, 1);
  std::set<std::size_t> winners(lg.record.argmax[0].begin(), lg.record.argmax[0].end());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!winners.count(i)) EXPECT_EQ(lg.input_grad.data[i], 0.0) << i;
}

TEST(Gradients, ReluDerivativeAtZeroIsZero) {
  NetworkSpec spec{{1}, {Dense{1, 1, Activation::relu}, Dense{1, 2, Activation::identity}}};
  NetworkWeights w;
  w.layers.push_back({Tensor({1, 1}, 1.0), Tensor({1}, 0.0)});
  w.layers.push_back({Tensor({2, 1}, {1.0, -1.0}), Tensor({2}, 0.0)});
  const auto lg = loss_and_gradients(spec, w, vec({0.0}), 0);
  EXPECT_EQ(lg.input_grad.data[0], 0.0);
  EXPECT_EQ(lg.weight_grads.layers[0].bias.data[0], 0.0);
}

TEST(Training, SeparableBlobsReachFullAccuracy) {
  const auto data = synthetic_blobs(2, 30, 2, 10.0, 4);
  NetworkSpec spec{{2}, {Dense{2, 2, Activation::identity}}};
  TrainOptions opt;
  opt.epochs = 20;
  opt.learning_rate = 0.5;
  opt.seed = 1;
  const auto r = sgd_train(spec, init_weights(spec, 2), data, opt);
  EXPECT_EQ(accuracy(spec, r.weights, data), 1.0);
  EXPECT_EQ(r.epoch_losses.size(), 20u);
}

TEST(Training, ZeroLearningRateKeepsWeightsBitForBit) {
  const auto data = synthetic_blobs(3, 5, 4, 3.0, 1);
  NetworkSpec spec{{4}, {Dense{4, 5, Activation::sigmoid}, Dense{5, 3, Activation::relu}}};
  const auto w0 = init_weights(spec, 3);
  TrainOptions opt;
  opt.epochs = 3;
  opt.learning_rate = 0.0;
  EXPECT_EQ(sgd_train(spec, w0, data, opt).weights, w0);
}

TEST(Training, DeterministicGivenSeed) {
  const auto data = synthetic_blobs(3, 10, 4, 3.0, 1);
  NetworkSpec spec{{4}, {Dense{4, 5, Activation::relu}, Dense{5, 3, Activation::relu}}};
  TrainOptions opt;
  opt.epochs = 4;
  opt.learning_rate = 0.1;
  opt.batch = 3;
  opt.seed = 17;
  const auto a = sgd_train(spec, init_weights(spec, 3), data, opt);
  const auto b = sgd_train(spec, init_weights(spec, 3), data, opt);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  opt.seed = 18;
  EXPECT_NE(sgd_train(spec, init_weights(spec, 3), data, opt).weights, a.weights);
}

TEST(Training, DivergenceReportsEpoch) {
  const auto data = synthetic_blobs(2, 10, 2, 3.0, 1);
  NetworkSpec spec{{2}, {Dense{2, 2, Activation::identity}}};
  TrainOptions opt;
  opt.epochs = 5;
  opt.learning_rate = 1e308;
  try {
    sgd_train(spec, init_weights(spec, 1), data, opt);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Training, RejectsEmptyDataAndNegativeRate) {
  NetworkSpec spec{{2}, {Dense{2, 2, Activation::identity}}};
  TrainOptions opt;
  EXPECT_THROW(sgd_train(spec, init_weights(spec, 1), LabeledDataset{}, opt), UsageError);
  opt.learning_rate = -1;
  EXPECT_THROW(sgd_train(spec, init_weights(spec, 1), synthetic_blobs(2, 2, 2, 3, 1), opt), UsageError);
}

TEST(Presets, FlattenDimensionIs1452) {
  const auto spec = preset("ccff-relu");
  const auto shapes = spec.output_shapes();
  EXPECT_EQ(shapes[0], (Shape{3, 24, 24}));
  EXPECT_EQ(shapes[1], (Shape{3, 22, 22}));
  EXPECT_EQ(shapes[2], (Shape{1452}));
  EXPECT_EQ(shapes.back(), (Shape{10}));
}

TEST(Presets, SigmoidDiffersOnlyInActivation) {
  auto relu = preset("ccff-relu");
  const auto sig = preset("ccff-sigmoid");
  ASSERT_EQ(relu.layers.size(), sig.layers.size());
  for (std::size_t l = 0; l < relu.layers.size(); ++l) {
    if (is_parametric(relu.layers[l])) {
      EXPECT_EQ(layer_activation(relu.layers[l]), Activation::relu);
      EXPECT_EQ(layer_activation(sig.layers[l]), Activation::sigmoid);
    }
    std::visit([](auto& l) {
      if constexpr (requires { l.activation; }) l.activation = Activation::sigmoid;
    }, relu.layers[l]);
  }
  EXPECT_EQ(relu, sig);
}

TEST(Presets, UnknownNameIsUsageError) {
  EXPECT_THROW(preset("alexnet"), UsageError);
  try {
    preset("alexnet");
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Init, GlorotBoundsAndSeedDeterminism) {
  const auto spec = preset("ccff-relu");
  const auto a = init_weights(spec, 42), b = init_weights(spec, 42);
  EXPECT_EQ(a, b);
  const double bound = std::sqrt(6.0 / (1452.0 + 256.0));
  for (double v : a.layers[3].weight.data) EXPECT_LE(std::fabs(v), bound);
  for (double v : a.layers[3].bias.data) EXPECT_EQ(v, 0.0);
  EXPECT_NE(init_weights(spec, 43), a);
}

TEST(Tensor, SizeMismatchIsConfigError) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ConfigError);
  Tensor t({2}, {1.0, std::nan("")});
  EXPECT_FALSE(t.all_finite());
}
