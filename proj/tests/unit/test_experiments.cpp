#include <gtest/gtest.h>

#include <sys/wait.h>

#include <sstream>

#include "helpers.hpp"
#include "nntopo/experiments.hpp"

using namespace nntopo;
using namespace testing_helpers;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NNTOPO_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 10 classes of 28x28 images: a bright 6x6 block whose position encodes the
// class, on low-level noise.
LabeledDataset block_dataset(int per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  LabeledDataset ds;
  ds.name = "blocks";
  for (int k = 0; k < per_class; ++k)
    for (int c = 0; c < 10; ++c) {
      Tensor t({1, 28, 28});
      for (double& v : t.data) v = double(rng() % 40) / 255.0;
      const int r0 = 2 + (c / 5) * 12 + int(rng() % 3), c0 = 1 + (c % 5) * 5 + int(rng() % 2);
      for (int r = r0; r < r0 + 6; ++r)
        for (int q = c0; q < std::min(28, c0 + 6); ++q) t.data[std::size_t(r * 28 + q)] = double(200 + rng() % 56) / 255.0;
      ds.push_back(t, c, "b");
    }
  return ds;
}

/// One small end-to-end run shared by the pipeline tests.
class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("pipeline");
    write_idx(block_dataset(20, 1), *dir_ / "images", *dir_ / "labels");
    config_ = new RunConfig(load_config("", {"data.images=" + (*dir_ / "images"), "data.labels=" + (*dir_ / "labels"),
                                             "data.name=blocks", "data.train_size=80", "data.test_size=40",
                                             "data.per_class=3", "model.epochs=4", "model.learning_rate=0.02",
                                             "attack.count=4", "kernel.folds=3",
                                             "output_dir=" + (*dir_ / "run")}));
    std::ostringstream log;
    train_ = new json(cmd_train(*config_, log));
    attack_ = new json(cmd_attack(*config_, log));
    cmd_topo(*config_, "all", log);
    classify_ = new json(cmd_classify_subgraphs(*config_, log));
    recover_ = new json(cmd_recover_adversaries(*config_, log));
    cmd_neighbors(*config_, log);
    cmd_perturb_compare(*config_, log);
    cmd_diagram_distance(*config_, log);
  }
  static void TearDownTestSuite() {
    delete train_;
    delete attack_;
    delete classify_;
    delete recover_;
    delete config_;
    delete dir_;
  }

  static TempDir* dir_;
  static RunConfig* config_;
  static json *train_, *attack_, *classify_, *recover_;
};

TempDir* Pipeline::dir_ = nullptr;
RunConfig* Pipeline::config_ = nullptr;
json* Pipeline::train_ = nullptr;
json* Pipeline::attack_ = nullptr;
json* Pipeline::classify_ = nullptr;
json* Pipeline::recover_ = nullptr;

std::vector<std::string> csv_lines(const std::string& file) {
  std::ifstream in(file);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(Config, DefaultsParse) {
  const auto c = load_config("");
  EXPECT_EQ(c.preset, "ccff-relu");
  EXPECT_EQ(c.adversary_count, 100u);
  EXPECT_EQ(c.pgd.epsilon, PgdOptions::desk().epsilon);
  EXPECT_FALSE(c.gamma);
  EXPECT_EQ(c.seeds.cv, 6u);
}

TEST(Config, OverridesAndFileMerge) {
  TempDir dir("cfg");
  {
    std::ofstream f(dir / "c.json");
    f << R"({"model": {"epochs": 9}, "kernel": {"gamma": 0.5}})";
  }
  const auto c = load_config(dir / "c.json", {"model.epochs=2", "data.name=fashion-mnist", "attack.preset=reference"});
  EXPECT_EQ(c.epochs, 2u);
  EXPECT_EQ(c.dataset_name, "fashion-mnist");
  EXPECT_EQ(c.gamma, 0.5);
  EXPECT_EQ(c.pgd.epsilon, PgdOptions::reference().epsilon);
  EXPECT_EQ(c.learning_rate, 0.01);
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, InvalidValuesAreUsageErrors) {
  EXPECT_THROW(load_config("", {"noequals"}), UsageError);
  EXPECT_THROW(load_config("", {"attack.preset=strong"}), UsageError);
  EXPECT_THROW(load_config("", {"kernel.C=0"}), UsageError);
  EXPECT_THROW(load_config("", {"persistence.wasserstein_q=0.5"}), UsageError);
  EXPECT_THROW(load_config("", {"persistence.max_pool=avg"}), UsageError);
  EXPECT_THROW(load_config("", {"model.epochs=\"many\""}), UsageError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("train --set data.images=/nonexistent/images --out " + dir.str()), 2);
  EXPECT_EQ(run_cli("classify-subgraphs --out " + dir.str()), 2);
  EXPECT_EQ(run_cli("attack --out " + dir.str()), 2);
  EXPECT_EQ(run_cli("train --set kernel.C=-1 --out " + dir.str()), 2);
}

TEST(ClassifySchema, ValidatorFlagsProblems) {
  json r = {{"format", "nntopo-classify/1"},
            {"reference", reference_accuracies()},
            {"samples", 30},
            {"classes", {0, 1, 2}},
            {"folds", 3},
            {"fold_accuracy", {0.9, 1.0}},
            {"skipped_folds", {2}},
            {"mean_accuracy", 0.95},
            {"gamma", nullptr},
            {"C", 1.0},
            {"universe_dimension", 1000},
            {"converged", true},
            {"config", {{"seeds", json::object()}}}};
  EXPECT_TRUE(validate_classify_report(r).empty());
  r["mean_accuracy"] = 1.5;
  EXPECT_EQ(validate_classify_report(r).size(), 1u);
  r["mean_accuracy"] = 0.5;
  r["skipped_folds"] = json::array();
  EXPECT_EQ(validate_classify_report(r).size(), 1u);
  r.erase("converged");
  EXPECT_FALSE(validate_classify_report(r).empty());
}

TEST(Store, MissingUpstreamArtifactNamesProducer) {
  TempDir dir("store");
  auto c = load_config("", {"output_dir=" + dir.str()});
  std::ostringstream log;
  try {
    cmd_classify_subgraphs(c, log);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("nntopo topo"), std::string::npos);
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST_F(Pipeline, TrainWritesBundleAndReport) {
  const ArtifactStore store(config_->output_dir);
  const auto b = load_bundle(store.model_dir());
  EXPECT_EQ(b.spec, preset("ccff-relu"));
  EXPECT_GT(train_->at("test_accuracy").get<double>(), 0.5);
  EXPECT_TRUE(train_->at("config").contains("seeds"));
}

TEST_F(Pipeline, AttackContract) {
  const ArtifactStore store(config_->output_dir);
  const auto advs = load_adversaries(store);
  ASSERT_EQ(advs.size(), attack_->at("successful").get<std::size_t>());
  ASSERT_FALSE(advs.empty());
  EXPECT_EQ(attack_->at("contract_satisfied"), attack_->at("successful"));
  for (const auto& a : advs) {
    EXPECT_TRUE(a.record.success);
    EXPECT_LE(a.record.perturbation_linf, config_->pgd.epsilon + 1e-12);
    EXPECT_NEAR(a.random.pre_clip_norm, a.record.perturbation_l2, 1e-9);
  }
}

TEST_F(Pipeline, TopoArtifactsReloadBitIdentical) {
  const ArtifactStore store(config_->output_dir);
  const auto bundle = load_bundle(store.model_dir());
  const auto data = load_experiment_data(*config_);
  const auto items = load_topo_index(store, "unaltered");
  ASSERT_EQ(items.size(), data.unaltered.size());
  for (std::size_t i = 0; i < 3; ++i) {
    const auto [g, p] = load_topo_item(store, "unaltered", items[i].id);
    const auto d = load_topo_diagram(store, "unaltered", items[i].id);
    const auto fresh = compute_topology(bundle.spec, bundle.weights, data.unaltered.images[i], items[i].id,
                                        config_->graph_options(), nullptr);
    EXPECT_EQ(g, fresh.graph);
    EXPECT_EQ(p, fresh.persistence);
    EXPECT_EQ(d, fresh.diagram);
    EXPECT_EQ(d, to_diagram(p));
  }
  const auto index = store.read_json(store.topo_dir("unaltered") + "/index.json", "topo");
  EXPECT_LT(index.at("equivalence").at("max_deviation").get<double>(), 1e-9);
}

TEST_F(Pipeline, ClassifyReportMatchesSchema) {
  const auto errors = validate_classify_report(*classify_);
  EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors.front());
  const ArtifactStore store(config_->output_dir);
  EXPECT_TRUE(validate_classify_report(store.read_json(store.reports_dir() + "/classify.json", "x")).empty());
}

TEST_F(Pipeline, RecoveryReportsNetworkFooled) {
  EXPECT_EQ(recover_->at("network_accuracy").get<double>(), 0.0);
  EXPECT_EQ(recover_->at("predictions").size(), attack_->at("successful").get<std::size_t>());
}

TEST_F(Pipeline, ReportCsvShapes) {
  const ArtifactStore store(config_->output_dir);
  const auto dd = csv_lines(store.reports_dir() + "/diagram_distance.csv");
  ASSERT_GE(dd.size(), 2u);
  EXPECT_EQ(dd[0], "id,linf,wasserstein");
  for (const auto& line : dd) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 2) << line;

  const auto pc = csv_lines(store.reports_dir() + "/perturb.csv");
  ASSERT_GE(pc.size(), 2u);
  for (const auto& line : pc) EXPECT_EQ(std::count(line.begin(), line.end(), ','), 15) << line;

  const auto ni = csv_lines(store.reports_dir() + "/neighbors_input.csv");
  EXPECT_EQ(ni.size(), 11u);
  const auto nj = store.read_json(store.reports_dir() + "/neighbors.json", "x");
  EXPECT_TRUE(nj.at("subgraph_space").contains("diagonal_margin"));
}

TEST(ClassSimilarity, AveragesOrderedPairs) {
  Eigen::MatrixXd D(3, 3);
  D << 0, 1, 3, 1, 0, 1, 3, 1, 0;
  const auto s = class_similarity(D, {0, 0, 1}, 2);
  EXPECT_DOUBLE_EQ(s(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(s(0, 1), (0.25 + 0.5) / 2);
  EXPECT_DOUBLE_EQ(s(1, 0), s(0, 1));
}
