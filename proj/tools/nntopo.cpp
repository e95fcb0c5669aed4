// nntopo: command-line driver for the experiment pipeline.
//
//   nntopo train | attack | topo | classify-subgraphs | recover-adversaries |
//          neighbors | perturb-compare | diagram-distance
//          [--config FILE] [--set key.path=value ...] [--out DIR]
//
// Exit codes: 0 success, 1 validation / numeric failure, 2 usage or I/O error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nntopo/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Persistent subgraph experiments on small convolutional networks"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  app.add_option("-c,--config", config_path, "JSON run configuration (defaults are used for missing keys)");
  app.add_option("-s,--set", overrides, "Override a configuration value, e.g. --set model.epochs=3");
  app.add_option("-o,--out", out_dir, "Output directory (overrides output_dir)");

  std::string topo_inputs = "all";
  auto* train = app.add_subcommand("train", "Train the network and write the model bundle");
  auto* attack = app.add_subcommand("attack", "Run PGD and store successful adversaries with matched noise");
  auto* topo = app.add_subcommand("topo", "Induced graphs, persistence and diagrams per input");
  topo->add_option("--inputs", topo_inputs, "unaltered, adversarial, random or all")
      ->check(CLI::IsMember({"unaltered", "adversarial", "random", "all"}));
  auto* classify = app.add_subcommand("classify-subgraphs", "Cross-validated subgraph SVM accuracy");
  auto* recover = app.add_subcommand("recover-adversaries", "Predict adversaries' true class from subgraphs");
  auto* neighbors = app.add_subcommand("neighbors", "Class similarity in input and subgraph space");
  auto* perturb = app.add_subcommand("perturb-compare", "Adversarial vs matched random perturbation tables");
  auto* ddist = app.add_subcommand("diagram-distance", "Input L-inf vs diagram Wasserstein distance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!out_dir.empty()) overrides.push_back("output_dir=\"" + out_dir + "\"");
    const auto cfg = nntopo::load_config(config_path, overrides);
    if (train->parsed()) nntopo::cmd_train(cfg);
    else if (attack->parsed()) nntopo::cmd_attack(cfg);
    else if (topo->parsed()) nntopo::cmd_topo(cfg, topo_inputs);
    else if (classify->parsed()) nntopo::cmd_classify_subgraphs(cfg);
    else if (recover->parsed()) nntopo::cmd_recover_adversaries(cfg);
    else if (neighbors->parsed()) nntopo::cmd_neighbors(cfg);
    else if (perturb->parsed()) nntopo::cmd_perturb_compare(cfg);
    else if (ddist->parsed()) nntopo::cmd_diagram_distance(cfg);
  } catch (const nntopo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
