#pragma once

// Experiment driver: run configuration, the on-disk artifact store and one
// function per CLI subcommand. Every command reads what earlier commands
// wrote under the output directory and fails with IoError when an upstream
// artifact is missing.
//
// Store layout (relative to output_dir):
//   model/manifest.json, model/weights.bin        train
//   reports/train.json                            train
//   adversaries/index.json, adversaries/<id>.json attack
//   topo/<set>/index.json                         topo  (set = unaltered | adversarial | random)
//   topo/<set>/<id>/{graph.bin,persistence.bin,diagram.csv}
//   subgraphs/universe.txt, subgraphs/unaltered.vec
//   reports/classify.json, reports/recover.json, reports/neighbors.json,
//   reports/neighbors_input.csv, reports/neighbors_subgraph.csv,
//   reports/perturb.csv, reports/perturb.json, reports/edge_diff_similarity.csv,
//   reports/edge_diff_by_adversary.csv, reports/diagram_distance.csv,
//   reports/diagram_distance.json

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "nntopo/attacks.hpp"
#include "nntopo/bundle.hpp"
#include "nntopo/data.hpp"
#include "nntopo/diagram.hpp"
#include "nntopo/error.hpp"
#include "nntopo/graph.hpp"
#include "nntopo/nn.hpp"
#include "nntopo/parallel.hpp"
#include "nntopo/persistence.hpp"
#include "nntopo/stats.hpp"
#include "nntopo/subgraph.hpp"
#include "nntopo/svm.hpp"

namespace nntopo {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct Seeds {
  std::uint64_t split = 1;   // train/test pool partition
  std::uint64_t subset = 2;  // train/test/U subsets of the pools
  std::uint64_t init = 3;    // weight initialisation
  std::uint64_t train = 4;   // SGD shuffling
  std::uint64_t attack = 5;  // candidate order beyond U, matched noise
  std::uint64_t cv = 6;      // fold assignment
};

struct RunConfig {
  // data
  std::string images;
  std::string labels;
  std::string dataset_name = "mnist";
  double split_fraction = 0.5;
  std::size_t train_size = 2000;
  std::size_t test_size = 500;
  std::size_t per_class = 30;  // U: subgraph samples per class
  // model
  std::string preset = "ccff-relu";
  std::size_t epochs = 5;
  double learning_rate = 0.01;
  std::size_t batch = 1;
  // attack
  std::string attack_preset = "desk";
  PgdOptions pgd = PgdOptions::desk();
  std::size_t adversary_count = 100;
  // persistence / diagrams
  std::size_t top_k = 512;
  double edge_epsilon = 0.0;
  MaxPoolEdges max_pool = MaxPoolEdges::argmax;
  double wasserstein_q = 2.0;
  // kernel / svm
  std::optional<double> gamma;  // empty: median heuristic
  double C = 1.0;
  bool spectral_clip = false;
  std::size_t folds = 10;

  Seeds seeds;
  std::string output_dir = "runs/desk";

  GraphOptions graph_options() const { return {max_pool, edge_epsilon}; }
};

inline json default_config_json() {
  return json::parse(R"({
    "data": {"images": "data/mnist5k/images-idx3-ubyte", "labels": "data/mnist5k/labels-idx1-ubyte",
             "name": "mnist", "split_fraction": 0.5, "train_size": 2000, "test_size": 500, "per_class": 30},
    "model": {"preset": "ccff-relu", "epochs": 5, "learning_rate": 0.01, "batch": 1},
    "attack": {"preset": "desk", "count": 100},
    "persistence": {"top_k": 512, "epsilon": 0.0, "max_pool": "argmax", "wasserstein_q": 2.0},
    "kernel": {"gamma": null, "C": 1.0, "spectral_clip": false, "folds": 10},
    "seeds": {"split": 1, "subset": 2, "init": 3, "train": 4, "attack": 5, "cv": 6},
    "output_dir": "runs/desk"
  })");
}

/// Applies "a.b.c=value" to a JSON object. The value is parsed as JSON when
/// possible and kept as a string otherwise.
inline void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  json* node = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object()) throw UsageError("override '" + path + "': '" + parts[i] + "' is not a section");
    node = &(*node)[parts[i]];
  }
  (*node)[parts.back()] = value;
}

/// Merges `patch` into `base` recursively (objects merge, everything else replaces).
inline void merge_json(json& base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      merge_json(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

inline RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    const auto& d = j.at("data");
    c.images = d.at("images");
    c.labels = d.at("labels");
    c.dataset_name = d.value("name", c.dataset_name);
    c.split_fraction = d.value("split_fraction", c.split_fraction);
    c.train_size = d.value("train_size", c.train_size);
    c.test_size = d.value("test_size", c.test_size);
    c.per_class = d.value("per_class", c.per_class);

    const auto& m = j.at("model");
    c.preset = m.value("preset", c.preset);
    c.epochs = m.value("epochs", c.epochs);
    c.learning_rate = m.value("learning_rate", c.learning_rate);
    c.batch = m.value("batch", c.batch);

    const auto& a = j.at("attack");
    c.attack_preset = a.value("preset", c.attack_preset);
    if (c.attack_preset == "desk") c.pgd = PgdOptions::desk();
    else if (c.attack_preset == "reference") c.pgd = PgdOptions::reference();
    else throw UsageError("unknown attack preset '" + c.attack_preset + "' (expected desk or reference)");
    c.pgd.epsilon = a.value("epsilon", c.pgd.epsilon);
    c.pgd.step = a.value("step", c.pgd.step);
    c.pgd.iterations = a.value("iterations", c.pgd.iterations);
    c.adversary_count = a.value("count", c.adversary_count);

    const auto& p = j.at("persistence");
    c.top_k = p.value("top_k", c.top_k);
    c.edge_epsilon = p.value("epsilon", c.edge_epsilon);
    const std::string pool = p.value("max_pool", std::string("argmax"));
    if (pool == "argmax") c.max_pool = MaxPoolEdges::argmax;
    else if (pool == "window") c.max_pool = MaxPoolEdges::window;
    else throw UsageError("persistence.max_pool must be argmax or window");
    c.wasserstein_q = p.value("wasserstein_q", c.wasserstein_q);

    const auto& k = j.at("kernel");
    if (k.contains("gamma") && !k.at("gamma").is_null()) c.gamma = k.at("gamma").get<double>();
    c.C = k.value("C", c.C);
    c.spectral_clip = k.value("spectral_clip", c.spectral_clip);
    c.folds = k.value("folds", c.folds);

    const auto& s = j.at("seeds");
    c.seeds.split = s.value("split", c.seeds.split);
    c.seeds.subset = s.value("subset", c.seeds.subset);
    c.seeds.init = s.value("init", c.seeds.init);
    c.seeds.train = s.value("train", c.seeds.train);
    c.seeds.attack = s.value("attack", c.seeds.attack);
    c.seeds.cv = s.value("cv", c.seeds.cv);

    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad configuration: ") + e.what());
  }
  if (c.train_size == 0 || c.test_size == 0 || c.per_class == 0)
    throw UsageError("data sizes must be positive");
  if (!(c.C > 0.0)) throw UsageError("kernel.C must be positive");
  if (!(c.wasserstein_q >= 1.0)) throw UsageError("persistence.wasserstein_q must be >= 1");
  if (c.gamma && !(*c.gamma > 0.0)) throw UsageError("kernel.gamma must be positive or null");
  return c;
}

inline json config_to_json(const RunConfig& c) {
  return {{"data",
           {{"images", c.images},
            {"labels", c.labels},
            {"name", c.dataset_name},
            {"split_fraction", c.split_fraction},
            {"train_size", c.train_size},
            {"test_size", c.test_size},
            {"per_class", c.per_class}}},
          {"model",
           {{"preset", c.preset}, {"epochs", c.epochs}, {"learning_rate", c.learning_rate}, {"batch", c.batch}}},
          {"attack",
           {{"preset", c.attack_preset},
            {"epsilon", c.pgd.epsilon},
            {"step", c.pgd.step},
            {"iterations", c.pgd.iterations},
            {"count", c.adversary_count}}},
          {"persistence",
           {{"top_k", c.top_k},
            {"epsilon", c.edge_epsilon},
            {"max_pool", c.max_pool == MaxPoolEdges::argmax ? "argmax" : "window"},
            {"wasserstein_q", c.wasserstein_q}}},
          {"kernel",
           {{"gamma", c.gamma ? json(*c.gamma) : json(nullptr)},
            {"C", c.C},
            {"spectral_clip", c.spectral_clip},
            {"folds", c.folds}}},
          {"seeds",
           {{"split", c.seeds.split},
            {"subset", c.seeds.subset},
            {"init", c.seeds.init},
            {"train", c.seeds.train},
            {"attack", c.seeds.attack},
            {"cv", c.seeds.cv}}},
          {"output_dir", c.output_dir}};
}

/// Defaults, then the config file (if any), then key=value overrides.
inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  json j = default_config_json();
  if (!path.empty()) {
    json file;
    try {
      file = json::parse(detail::slurp(path));
    } catch (const json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
    merge_json(j, file);
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Artifact store

class ArtifactStore {
 public:
  explicit ArtifactStore(std::string root) : root_(std::move(root)) {}

  const std::string& root() const { return root_; }
  std::string path(const std::string& rel) const { return root_ + "/" + rel; }
  std::string model_dir() const { return path("model"); }
  std::string reports_dir() const { return path("reports"); }
  std::string adversary_dir() const { return path("adversaries"); }
  std::string topo_dir(const std::string& set) const { return path("topo/" + set); }
  std::string topo_item_dir(const std::string& set, const std::string& id) const {
    return topo_dir(set) + "/" + id;
  }

  /// Throws IoError naming the command that produces the missing artifact.
  void require(const std::string& file, const std::string& producer) const {
    if (!fs::exists(file))
      throw IoError("missing artifact '" + file + "'; run `" + producer + "` first");
  }

  void write_json(const std::string& file, const json& j) const {
    fs::create_directories(fs::path(file).parent_path());
    detail::dump(file, j.dump(2) + "\n");
  }

  json read_json(const std::string& file, const std::string& producer) const {
    require(file, producer);
    try {
      return json::parse(detail::slurp(file));
    } catch (const json::exception& e) {
      throw FormatError(file + ": " + e.what());
    }
  }

 private:
  std::string root_;
};

/// Seeds and configuration embedded in every manifest and report.
inline json provenance(const RunConfig& c) {
  return {{"config", config_to_json(c)}};
}

// ---------------------------------------------------------------------------
// Datasets derived from the configuration

struct ExperimentData {
  LabeledDataset train;  // network training subset
  LabeledDataset test;   // held-out accuracy subset
  LabeledDataset unaltered;  // U: per_class images per class from the test pool
  LabeledDataset test_pool;
};

inline ExperimentData load_experiment_data(const RunConfig& c) {
  if (!fs::exists(c.images)) throw IoError("dataset images not found: '" + c.images + "'");
  if (!fs::exists(c.labels)) throw IoError("dataset labels not found: '" + c.labels + "'");
  auto ds = load_idx(c.images, c.labels, c.dataset_name);
  ds.validate();
  auto [train_pool, test_pool] = split(ds, c.split_fraction, c.seeds.split);
  ExperimentData out;
  out.train = take_first(train_pool, c.train_size, c.seeds.subset);
  out.test = take_first(test_pool, c.test_size, c.seeds.subset + 1);
  out.unaltered = take_per_class(test_pool, c.per_class, c.seeds.subset + 2);
  out.test_pool = std::move(test_pool);
  return out;
}

inline ModelBundle require_model(const ArtifactStore& store) {
  store.require(store.model_dir() + "/manifest.json", "nntopo train");
  return load_bundle(store.model_dir());
}

// ---------------------------------------------------------------------------
// train

inline json cmd_train(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto data = load_experiment_data(c);
  const auto spec = preset(c.preset);
  const auto t0 = std::chrono::steady_clock::now();
  TrainOptions opt;
  opt.epochs = c.epochs;
  opt.learning_rate = c.learning_rate;
  opt.batch = c.batch;
  opt.seed = c.seeds.train;
  const auto result = sgd_train(spec, init_weights(spec, c.seeds.init), data.train, opt,
                                [&](std::size_t e, double loss) {
                                  log << "epoch " << e + 1 << "/" << c.epochs << " loss " << loss << "\n";
                                });
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double acc = accuracy(spec, result.weights, data.test);

  ModelBundle bundle{spec, result.weights, provenance(c)};
  bundle.metadata["preset"] = c.preset;
  bundle.metadata["epoch_losses"] = result.epoch_losses;
  bundle.metadata["train_size"] = data.train.size();
  bundle.metadata["test_size"] = data.test.size();
  bundle.metadata["test_accuracy"] = acc;
  save_bundle(bundle, store.model_dir());

  json report = provenance(c);
  report["test_accuracy"] = acc;
  report["train_size"] = data.train.size();
  report["test_size"] = data.test.size();
  report["epoch_losses"] = result.epoch_losses;
  report["training_seconds"] = seconds;
  store.write_json(store.reports_dir() + "/train.json", report);
  log << "test accuracy " << acc * 100.0 << "% on " << data.test.size() << " images (" << seconds << " s)\n";
  return report;
}

// ---------------------------------------------------------------------------
// attack

struct StoredAdversary {
  AdversarialRecord record;
  MatchedPerturbation random;
  std::uint64_t noise_seed = 0;
};

inline json adversary_to_json(const StoredAdversary& a) {
  json j = to_json(a.record);
  j["random"] = {{"seed", a.noise_seed},
                 {"image", a.random.image.data},
                 {"target_norm", a.random.target_norm},
                 {"pre_clip_norm", a.random.pre_clip_norm},
                 {"achieved_norm", a.random.achieved_norm}};
  return j;
}

inline StoredAdversary adversary_from_store_json(const json& j) {
  StoredAdversary a;
  a.record = adversary_from_json(j);
  try {
    const auto& r = j.at("random");
    a.noise_seed = r.at("seed");
    a.random.image = Tensor(a.record.original_image.shape, r.at("image").get<std::vector<double>>());
    a.random.target_norm = r.at("target_norm");
    a.random.pre_clip_norm = r.at("pre_clip_norm");
    a.random.achieved_norm = r.at("achieved_norm");
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed matched perturbation: ") + e.what());
  }
  return a;
}

/// Attacks correctly classified images, U first and then the rest of the
/// test pool in seeded order, until `adversary_count` attacks succeed.
inline json cmd_attack(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto bundle = require_model(store);
  const auto data = load_experiment_data(c);
  if (c.adversary_count == 0) throw UsageError("attack.count must be positive");

  std::vector<std::pair<const LabeledDataset*, std::size_t>> candidates;
  std::set<std::string> in_u(data.unaltered.ids.begin(), data.unaltered.ids.end());
  for (std::size_t i = 0; i < data.unaltered.size(); ++i) candidates.emplace_back(&data.unaltered, i);
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < data.test_pool.size(); ++i)
    if (!in_u.count(data.test_pool.ids[i])) rest.push_back(i);
  std::mt19937_64 rng(c.seeds.attack);
  std::shuffle(rest.begin(), rest.end(), rng);
  for (auto i : rest) candidates.emplace_back(&data.test_pool, i);

  fs::remove_all(store.adversary_dir());
  fs::create_directories(store.adversary_dir());

  std::vector<StoredAdversary> kept;
  std::size_t attempted = 0, misclassified_clean = 0, failed = 0, from_u = 0;
  const std::size_t batch = std::max<std::size_t>(8, worker_count() * 4);
  for (std::size_t start = 0; start < candidates.size() && kept.size() < c.adversary_count; start += batch) {
    const std::size_t end = std::min(candidates.size(), start + batch);
    std::vector<std::optional<AdversarialRecord>> out(end - start);
    parallel_for(end - start, [&](std::size_t k) {
      const auto [ds, i] = candidates[start + k];
      if (predict(bundle.spec, bundle.weights, ds->images[i]) != ds->labels[i]) return;
      out[k] = pgd_attack(bundle.spec, bundle.weights, ds->images[i], ds->labels[i], c.pgd, ds->ids[i]);
    });
    for (std::size_t k = 0; k < out.size() && kept.size() < c.adversary_count; ++k) {
      ++attempted;
      if (!out[k]) {
        ++misclassified_clean;
        continue;
      }
      if (!out[k]->success) {
        ++failed;
        continue;
      }
      StoredAdversary a;
      a.record = std::move(*out[k]);
      a.noise_seed = c.seeds.attack * 1000003ull + kept.size();
      a.random = matched_random_perturbation(a.record.original_image, a.record, a.noise_seed);
      if (candidates[start + k].first == &data.unaltered) ++from_u;
      kept.push_back(std::move(a));
    }
  }

  json index = provenance(c);
  index["format"] = "nntopo-adversary-index/1";
  index["ids"] = json::array();
  index["records"] = json::array();
  std::size_t contract_ok = 0;
  for (const auto& a : kept) {
    store.write_json(store.adversary_dir() + "/" + a.record.original_id + ".json", adversary_to_json(a));
    index["ids"].push_back(a.record.original_id);
    index["records"].push_back({{"id", a.record.original_id},
                                {"label", a.record.original_label},
                                {"predicted_class", a.record.predicted_class},
                                {"perturbation_linf", a.record.perturbation_linf},
                                {"perturbation_l2", a.record.perturbation_l2}});
    const auto& x = a.record.adversarial_image.data;
    const bool in_box = std::all_of(x.begin(), x.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
    contract_ok += a.record.perturbation_linf <= c.pgd.epsilon + 1e-12 && in_box &&
                   a.record.predicted_class != a.record.original_label;
  }
  index["attempted"] = attempted;
  index["skipped_misclassified"] = misclassified_clean;
  index["failed"] = failed;
  index["successful"] = kept.size();
  index["from_unaltered_set"] = kept.size() ? from_u : 0;
  index["contract_satisfied"] = contract_ok;
  store.write_json(store.adversary_dir() + "/index.json", index);
  log << kept.size() << " successful adversaries from " << attempted << " candidates (" << failed
      << " attacks failed, " << misclassified_clean << " skipped as already misclassified)\n";
  if (kept.size() < c.adversary_count)
    log << "warning: only " << kept.size() << " of " << c.adversary_count << " requested adversaries found\n";
  return index;
}

inline std::vector<StoredAdversary> load_adversaries(const ArtifactStore& store) {
  const auto index = store.read_json(store.adversary_dir() + "/index.json", "nntopo attack");
  std::vector<StoredAdversary> out;
  for (const auto& id : index.at("ids")) {
    const std::string file = store.adversary_dir() + "/" + id.get<std::string>() + ".json";
    out.push_back(adversary_from_store_json(store.read_json(file, "nntopo attack")));
  }
  return out;
}

// ---------------------------------------------------------------------------
// topo

struct TopoInput {
  std::string id;
  int label = -1;
  Tensor image;
};

/// Graph, persistence and diagram for one image.
struct TopoArtifacts {
  InducedGraph graph;
  PersistenceResult persistence;
  Diagram diagram;
  int prediction = -1;
};

inline TopoArtifacts compute_topology(const NetworkSpec& spec, const NetworkWeights& weights, const Tensor& image,
                                      const std::string& id, const GraphOptions& options,
                                      EquivalenceReport* equivalence = nullptr) {
  TopoArtifacts t;
  const auto rec = forward(spec, weights, image);
  t.prediction = rec.predicted_class;
  t.graph = build_induced_graph(spec, weights, rec, options);
  t.graph.input_id = id;
  if (equivalence) {
    if (options.epsilon > 0.0)
      throw UsageError("forward equivalence needs every edge (persistence.epsilon = 0)");
    *equivalence = verify_forward_equivalence(spec, weights, t.graph, rec);
  }
  t.persistence = compute_persistence(t.graph);
  t.persistence.input_id = id;
  t.diagram = to_diagram(t.persistence);
  return t;
}

inline std::vector<TopoInput> topo_inputs(const std::string& set, const ExperimentData& data,
                                          const ArtifactStore& store) {
  std::vector<TopoInput> in;
  if (set == "unaltered") {
    for (std::size_t i = 0; i < data.unaltered.size(); ++i)
      in.push_back({data.unaltered.ids[i], data.unaltered.labels[i], data.unaltered.images[i]});
  } else if (set == "adversarial" || set == "random") {
    for (auto& a : load_adversaries(store))
      in.push_back({a.record.original_id, a.record.original_label,
                    set == "adversarial" ? a.record.adversarial_image : a.random.image});
  } else {
    throw UsageError("unknown input set '" + set + "' (expected unaltered, adversarial, random or all)");
  }
  return in;
}

/// Writes topo/<set>/<id>/{graph.bin,persistence.bin,diagram.csv} for every
/// input of the set plus an index; the first input gets the forward
/// equivalence smoke check.
inline json cmd_topo_set(const RunConfig& c, const std::string& set, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto bundle = require_model(store);
  const auto data = load_experiment_data(c);
  const auto inputs = topo_inputs(set, data, store);
  if (inputs.empty()) throw UsageError("input set '" + set + "' is empty");

  fs::remove_all(store.topo_dir(set));
  std::vector<json> rows(inputs.size());
  EquivalenceReport eq;
  parallel_for(inputs.size(), [&](std::size_t i) {
    const auto& in = inputs[i];
    auto t = compute_topology(bundle.spec, bundle.weights, in.image, in.id, c.graph_options(), i == 0 ? &eq : nullptr);
    const std::string dir = store.topo_item_dir(set, in.id);
    fs::create_directories(dir);
    save_graph(t.graph, dir + "/graph.bin");
    save_persistence(t.persistence, dir + "/persistence.bin");
    save_diagram_csv(t.diagram, dir + "/diagram.csv");
    rows[i] = {{"id", in.id},
               {"label", in.label},
               {"prediction", t.prediction},
               {"edges", t.graph.edges.size()},
               {"generators", t.persistence.generators.size()},
               {"infinite", t.persistence.infinite_count()}};
  });

  json index = provenance(c);
  index["format"] = "nntopo-topo-index/1";
  index["set"] = set;
  index["items"] = rows;
  index["equivalence"] = {{"input", inputs.front().id}, {"max_deviation", eq.worst}};
  store.write_json(store.topo_dir(set) + "/index.json", index);
  log << set << ": " << inputs.size() << " artifact sets, forward equivalence deviation " << eq.worst << "\n";
  return index;
}

/// set = unaltered | adversarial | random | all ("all" skips the attack sets
/// when no adversaries exist yet).
inline json cmd_topo(const RunConfig& c, const std::string& set = "all", std::ostream& log = std::cout) {
  if (set != "all") return cmd_topo_set(c, set, log);
  json out;
  out["unaltered"] = cmd_topo_set(c, "unaltered", log);
  const ArtifactStore store(c.output_dir);
  if (fs::exists(store.adversary_dir() + "/index.json")) {
    out["adversarial"] = cmd_topo_set(c, "adversarial", log);
    out["random"] = cmd_topo_set(c, "random", log);
  } else {
    log << "no adversaries yet; skipping adversarial and random sets\n";
  }
  return out;
}

struct TopoItem {
  std::string id;
  int label = -1;
  int prediction = -1;
};

inline std::vector<TopoItem> load_topo_index(const ArtifactStore& store, const std::string& set) {
  const auto index = store.read_json(store.topo_dir(set) + "/index.json", "nntopo topo --set " + set);
  std::vector<TopoItem> items;
  for (const auto& r : index.at("items")) items.push_back({r.at("id"), r.at("label"), r.at("prediction")});
  return items;
}

inline std::pair<InducedGraph, PersistenceResult> load_topo_item(const ArtifactStore& store,
                                                                 const std::string& set, const std::string& id) {
  const std::string dir = store.topo_item_dir(set, id);
  store.require(dir + "/graph.bin", "nntopo topo --set " + set);
  store.require(dir + "/persistence.bin", "nntopo topo --set " + set);
  return {load_graph(dir + "/graph.bin"), load_persistence(dir + "/persistence.bin")};
}

inline Diagram load_topo_diagram(const ArtifactStore& store, const std::string& set, const std::string& id) {
  const std::string file = store.topo_item_dir(set, id) + "/diagram.csv";
  store.require(file, "nntopo topo --set " + set);
  return load_diagram_csv(file);
}

/// Sorted unique edge keys of a graph.
inline std::vector<std::uint64_t> edge_keys(const InducedGraph& g) {
  std::vector<std::uint64_t> k;
  k.reserve(g.edges.size());
  for (const auto& e : g.edges) k.push_back(edge_key(e));
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

/// Union of the edges of every listed item, loading one graph at a time.
inline EdgeUniverse universe_of(const ArtifactStore& store,
                                const std::vector<std::pair<std::string, std::string>>& set_and_id) {
  std::vector<std::uint64_t> all;
  for (const auto& [set, id] : set_and_id) {
    const auto k = edge_keys(load_topo_item(store, set, id).first);
    std::vector<std::uint64_t> merged;
    merged.reserve(all.size() + k.size());
    std::set_union(all.begin(), all.end(), k.begin(), k.end(), std::back_inserter(merged));
    all.swap(merged);
  }
  return EdgeUniverse::from_keys(std::move(all));
}

inline std::vector<LifetimeVector> vectorize_items(const ArtifactStore& store, const std::string& set,
                                                   const std::vector<TopoItem>& items,
                                                   const EdgeUniverse& universe, VectorMode mode) {
  std::vector<LifetimeVector> out(items.size());
  parallel_for(items.size(), [&](std::size_t i) {
    const auto [g, p] = load_topo_item(store, set, items[i].id);
    out[i] = vectorize(g, p, universe, mode);
  });
  return out;
}

/// Universe over U and the lifetime-weighted vectors of U; also written to
/// subgraphs/ for external use.
inline std::pair<EdgeUniverse, std::vector<LifetimeVector>> unaltered_vectors(const ArtifactStore& store,
                                                                              const std::vector<TopoItem>& items) {
  std::vector<std::pair<std::string, std::string>> ids;
  for (const auto& it : items) ids.emplace_back("unaltered", it.id);
  auto universe = universe_of(store, ids);
  auto vectors = vectorize_items(store, "unaltered", items, universe, VectorMode::lifetime_weighted);
  fs::create_directories(store.path("subgraphs"));
  universe.save(store.path("subgraphs/universe.txt"));
  save_vectors(vectors, store.path("subgraphs/unaltered.vec"));
  return {std::move(universe), std::move(vectors)};
}

// ---------------------------------------------------------------------------
// classify-subgraphs

/// Published accuracies (percent) quoted in report headers for comparison.
inline json reference_accuracies() {
  return json::parse(R"({
    "mnist": {
      "ccff-relu":    {"subgraph_svm": 89.3, "network": 97.6, "recovery": 70.3},
      "ccff-sigmoid": {"subgraph_svm": 89.1, "network": 88.8, "recovery": 83.4}
    },
    "fashion-mnist": {
      "ccff-relu":    {"subgraph_svm": 89.3, "network": 90.0, "recovery": 80.3},
      "ccff-sigmoid": {"subgraph_svm": 80.0, "network": 80.2, "recovery": 73.3}
    }
  })");
}

/// Schema check for reports/classify.json; returns the list of problems.
inline std::vector<std::string> validate_classify_report(const json& r) {
  std::vector<std::string> errors;
  auto need = [&](const char* key, auto pred, const char* what) {
    if (!r.contains(key)) errors.push_back(std::string("missing '") + key + "'");
    else if (!pred(r.at(key))) errors.push_back(std::string("'") + key + "' must be " + what);
  };
  auto is_fraction = [](const json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; };
  auto is_count = [](const json& v) { return v.is_number_integer() && v.get<std::int64_t>() >= 0; };
  need("format", [](const json& v) { return v.is_string() && v == "nntopo-classify/1"; }, "\"nntopo-classify/1\"");
  need("reference", [](const json& v) { return v.is_object() && !v.empty(); }, "a nonempty object");
  need("samples", [&](const json& v) { return is_count(v) && v.get<std::int64_t>() > 0; }, "a positive integer");
  need("classes", [](const json& v) { return v.is_array(); }, "an array");
  need("folds", is_count, "an integer");
  need("fold_accuracy", [&](const json& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), is_fraction);
  }, "an array of fractions");
  need("skipped_folds", [](const json& v) { return v.is_array(); }, "an array");
  need("mean_accuracy", is_fraction, "a fraction");
  need("gamma", [](const json& v) { return v.is_null() || (v.is_number() && v.get<double>() > 0.0); }, "null or positive");
  need("C", [](const json& v) { return v.is_number() && v.get<double>() > 0.0; }, "positive");
  need("universe_dimension", is_count, "an integer");
  need("converged", [](const json& v) { return v.is_boolean(); }, "a boolean");
  need("config", [](const json& v) { return v.is_object() && v.contains("seeds"); }, "an object with seeds");
  if (errors.empty() && r.at("fold_accuracy").size() + r.at("skipped_folds").size() != r.at("folds").get<std::size_t>())
    errors.push_back("completed plus skipped folds must equal 'folds'");
  return errors;
}

inline json cmd_classify_subgraphs(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto items = load_topo_index(store, "unaltered");
  const auto [universe, vectors] = unaltered_vectors(store, items);
  std::vector<int> labels;
  for (const auto& it : items) labels.push_back(it.label);

  CrossValidationOptions opt;
  opt.folds = c.folds;
  opt.smo.C = c.C;
  opt.gamma = c.gamma;
  opt.seed = c.seeds.cv;
  const auto D = pairwise_distances(vectors);
  const auto cv = cross_validate_distances(D, labels, opt);

  json r = provenance(c);
  r["format"] = "nntopo-classify/1";
  r["reference"] = reference_accuracies();
  r["samples"] = items.size();
  r["classes"] = std::set<int>(labels.begin(), labels.end());
  r["folds"] = c.folds;
  r["fold_accuracy"] = cv.fold_accuracy;
  r["skipped_folds"] = cv.skipped;
  r["mean_accuracy"] = cv.mean_accuracy;
  r["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  r["C"] = c.C;
  r["universe_dimension"] = universe.size();
  r["converged"] = cv.all_converged;
  store.write_json(store.reports_dir() + "/classify.json", r);
  log << "subgraph SVM " << c.folds << "-fold accuracy " << cv.mean_accuracy * 100.0 << "% over " << items.size()
      << " subgraphs (" << universe.size() << " edge dimensions)\n";
  for (auto f : cv.skipped) log << "warning: fold " << f << " skipped (class missing from its training part)\n";
  if (!cv.all_converged) log << "warning: some SVMs hit the iteration cap\n";
  return r;
}

// ---------------------------------------------------------------------------
// recover-adversaries

inline json cmd_recover_adversaries(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto items = load_topo_index(store, "unaltered");
  const auto adv_items = load_topo_index(store, "adversarial");
  if (adv_items.empty()) throw UsageError("adversary set is empty");
  const auto [universe, train] = unaltered_vectors(store, items);
  const auto test = vectorize_items(store, "adversarial", adv_items, universe, VectorMode::lifetime_weighted);

  std::vector<int> labels;
  for (const auto& it : items) labels.push_back(it.label);
  const auto K = kernel_from_distances(pairwise_distances(train), c.gamma, c.spectral_clip);
  SmoOptions smo;
  smo.C = c.C;
  const auto model = ovo_train(K.values, labels, smo);
  const auto pred = ovo_predict(model, exp_kernel(cross_distances(test, train), K.gamma));

  std::size_t recovered = 0, network_correct = 0;
  json rows = json::array();
  for (std::size_t i = 0; i < adv_items.size(); ++i) {
    recovered += pred[i] == adv_items[i].label;
    network_correct += adv_items[i].prediction == adv_items[i].label;
    rows.push_back({{"id", adv_items[i].id},
                    {"label", adv_items[i].label},
                    {"network_prediction", adv_items[i].prediction},
                    {"svm_prediction", pred[i]}});
  }
  json r = provenance(c);
  r["format"] = "nntopo-recover/1";
  r["reference"] = reference_accuracies();
  r["training_subgraphs"] = items.size();
  r["adversaries"] = adv_items.size();
  r["recovery_accuracy"] = double(recovered) / double(adv_items.size());
  r["network_accuracy"] = double(network_correct) / double(adv_items.size());
  r["gamma"] = K.gamma;
  r["gamma_fallback"] = K.gamma_fallback;
  r["converged"] = model.converged();
  r["predictions"] = rows;
  store.write_json(store.reports_dir() + "/recover.json", r);
  log << "recovered the true class of " << recovered << "/" << adv_items.size() << " adversaries ("
      << r["recovery_accuracy"].get<double>() * 100.0 << "%); network accuracy on them "
      << r["network_accuracy"].get<double>() * 100.0 << "%\n";
  if (K.gamma_fallback) log << "warning: median distance is 0, kernel gamma fell back to 1\n";
  return r;
}

// ---------------------------------------------------------------------------
// neighbors

inline double similarity(double d) { return 1.0 / (1.0 + d); }

/// Mean of 1/(1+d) over ordered pairs i != j, grouped by (class_i, class_j).
inline Eigen::MatrixXd class_similarity(const Eigen::MatrixXd& D, const std::vector<int>& labels, int classes) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(classes, classes);
  Eigen::MatrixXd count = Eigen::MatrixXd::Zero(classes, classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (i == j) continue;
      sum(labels[i], labels[j]) += similarity(D(Eigen::Index(i), Eigen::Index(j)));
      count(labels[i], labels[j]) += 1.0;
    }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(classes, classes);
  for (int a = 0; a < classes; ++a)
    for (int b = 0; b < classes; ++b)
      if (count(a, b) > 0) out(a, b) = sum(a, b) / count(a, b);
  return out;
}

inline void write_matrix_csv(const std::string& file, const Eigen::MatrixXd& m, const std::string& corner) {
  fs::create_directories(fs::path(file).parent_path());
  std::ofstream out(file);
  if (!out) throw IoError("cannot write '" + file + "'");
  out << corner;
  for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << c;
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << ',' << format_double(m(r, c));
    out << '\n';
  }
}

inline double diagonal_margin(const Eigen::MatrixXd& m) {
  const auto k = m.rows();
  if (k < 2) return 0.0;
  const double diag = m.diagonal().mean();
  const double off = (m.sum() - m.diagonal().sum()) / double(k * k - k);
  return diag - off;
}

/// Leave-one-out 1-NN accuracy from a square distance matrix.
inline double loo_nearest_neighbor(const Eigen::MatrixXd& D, const std::vector<int>& labels) {
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < D.cols(); ++j)
      if (j != i && (best < 0 || D(i, j) < D(i, best))) best = j;
    correct += best >= 0 && labels[std::size_t(best)] == labels[std::size_t(i)];
  }
  return D.rows() ? double(correct) / double(D.rows()) : 0.0;
}

inline json cmd_neighbors(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto items = load_topo_index(store, "unaltered");
  const auto data = load_experiment_data(c);
  std::map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < data.unaltered.size(); ++i) pos[data.unaltered.ids[i]] = i;

  std::vector<int> labels;
  std::vector<const Tensor*> images;
  int classes = 0;
  for (const auto& it : items) {
    const auto p = pos.find(it.id);
    if (p == pos.end()) throw ConsistencyError("topology artifact '" + it.id + "' is not in the configured U set");
    images.push_back(&data.unaltered.images[p->second]);
    labels.push_back(it.label);
    classes = std::max(classes, it.label + 1);
  }
  const auto n = Eigen::Index(items.size());
  Eigen::MatrixXd Dx = Eigen::MatrixXd::Zero(n, n);
  parallel_for(items.size(), [&](std::size_t i) {
    for (std::size_t j = i + 1; j < items.size(); ++j)
      Dx(Eigen::Index(i), Eigen::Index(j)) = Dx(Eigen::Index(j), Eigen::Index(i)) = l2_distance(*images[i], *images[j]);
  });
  const auto vectors = unaltered_vectors(store, items).second;
  const auto Ds = pairwise_distances(vectors);

  const auto Sx = class_similarity(Dx, labels, classes);
  const auto Ss = class_similarity(Ds, labels, classes);
  write_matrix_csv(store.reports_dir() + "/neighbors_input.csv", Sx, "class");
  write_matrix_csv(store.reports_dir() + "/neighbors_subgraph.csv", Ss, "class");

  json r = provenance(c);
  r["format"] = "nntopo-neighbors/1";
  r["classes"] = classes;
  r["samples"] = items.size();
  r["similarity"] = "1/(1+d)";
  r["input_space"] = {{"diagonal_margin", diagonal_margin(Sx)}, {"loo_1nn_accuracy", loo_nearest_neighbor(Dx, labels)}};
  r["subgraph_space"] = {{"diagonal_margin", diagonal_margin(Ss)}, {"loo_1nn_accuracy", loo_nearest_neighbor(Ds, labels)}};
  store.write_json(store.reports_dir() + "/neighbors.json", r);
  log << "class similarity matrices written (" << classes << "x" << classes << "); 1-NN accuracy input "
      << r["input_space"]["loo_1nn_accuracy"].get<double>() * 100.0 << "%, subgraph "
      << r["subgraph_space"]["loo_1nn_accuracy"].get<double>() * 100.0 << "%\n";
  return r;
}

// ---------------------------------------------------------------------------
// perturb-compare

inline json cmd_perturb_compare(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto adversaries = load_adversaries(store);
  if (adversaries.empty()) throw UsageError("adversary set is empty");
  const auto unaltered = load_topo_index(store, "unaltered");
  std::map<std::string, int> adv_pred;
  for (const auto& it : load_topo_index(store, "adversarial")) adv_pred[it.id] = it.prediction;
  load_topo_index(store, "random");

  // Originals of the adversaries may lie outside U; their topology is
  // recomputed from the stored clean image.
  const auto bundle = require_model(store);
  const std::size_t m = adversaries.size();
  std::vector<std::uint64_t> universe_keys;
  std::vector<LifetimeVector> v_orig(m), v_adv(m), v_rnd(m);
  std::vector<std::array<std::size_t, 3>> gens(m), edges(m);
  std::vector<std::vector<std::uint64_t>> added(m);

  // Pass 1: universe over all three images of every adversary.
  for (std::size_t i = 0; i < m; ++i) {
    const auto& id = adversaries[i].record.original_id;
    auto orig = compute_topology(bundle.spec, bundle.weights, adversaries[i].record.original_image, id,
                                 c.graph_options());
    const auto k0 = edge_keys(orig.graph);
    const auto k1 = edge_keys(load_topo_item(store, "adversarial", id).first);
    const auto k2 = edge_keys(load_topo_item(store, "random", id).first);
    std::set_difference(k1.begin(), k1.end(), k0.begin(), k0.end(), std::back_inserter(added[i]));
    for (const auto* k : {&k0, &k1, &k2}) {
      std::vector<std::uint64_t> merged;
      std::set_union(universe_keys.begin(), universe_keys.end(), k->begin(), k->end(), std::back_inserter(merged));
      universe_keys.swap(merged);
    }
  }
  const auto universe = EdgeUniverse::from_keys(std::move(universe_keys));

  // Pass 2: vectors, counts.
  parallel_for(m, [&](std::size_t i) {
    const auto& id = adversaries[i].record.original_id;
    auto orig = compute_topology(bundle.spec, bundle.weights, adversaries[i].record.original_image, id,
                                 c.graph_options());
    const auto [ga, pa] = load_topo_item(store, "adversarial", id);
    const auto [gr, pr] = load_topo_item(store, "random", id);
    v_orig[i] = vectorize(orig.graph, orig.persistence, universe, VectorMode::lifetime_weighted);
    v_adv[i] = vectorize(ga, pa, universe, VectorMode::lifetime_weighted);
    v_rnd[i] = vectorize(gr, pr, universe, VectorMode::lifetime_weighted);
    gens[i] = {orig.persistence.generators.size(), pr.generators.size(), pa.generators.size()};
    edges[i] = {orig.persistence.generator_edge_count(), pr.generator_edge_count(), pa.generator_edge_count()};
  });

  // Edge-set differences against every unaltered subgraph.
  int classes = 0;
  for (const auto& it : unaltered) classes = std::max(classes, it.label + 1);
  for (const auto& a : adversaries)
    classes = std::max({classes, a.record.clean_prediction + 1, a.record.predicted_class + 1});
  Eigen::MatrixXd per_adv = Eigen::MatrixXd::Zero(Eigen::Index(m), classes);  // mean fraction per class
  Eigen::MatrixXd compared = Eigen::MatrixXd::Zero(Eigen::Index(m), classes);
  for (const auto& it : unaltered) {
    const auto keys = edge_keys(load_topo_item(store, "unaltered", it.id).first);
    parallel_for(m, [&](std::size_t i) {
      if (added[i].empty() || adversaries[i].record.original_id == it.id) return;
      std::size_t hit = 0;
      for (auto k : added[i]) hit += std::binary_search(keys.begin(), keys.end(), k);
      per_adv(Eigen::Index(i), it.label) += double(hit) / double(added[i].size());
      compared(Eigen::Index(i), it.label) += 1.0;
    });
  }
  per_adv = (compared.array() > 0).select(per_adv.array() / compared.array().max(1.0), 0.0).matrix();
  Eigen::MatrixXd block = Eigen::MatrixXd::Zero(classes, classes);
  Eigen::VectorXd block_n = Eigen::VectorXd::Zero(classes);
  std::size_t empty_diffs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (added[i].empty()) {
      ++empty_diffs;
      continue;
    }
    const int row = adversaries[i].record.clean_prediction;
    block.row(row) += per_adv.row(Eigen::Index(i));
    block_n(row) += 1.0;
  }
  for (int r = 0; r < classes; ++r)
    if (block_n(r) > 0) block.row(r) /= block_n(r);

  // Tables.
  fs::create_directories(store.reports_dir());
  {
    std::ofstream out(store.reports_dir() + "/perturb.csv");
    if (!out) throw IoError("cannot write perturbation table");
    out << "id,label,clean_prediction,adversarial_prediction,distance_original,distance_random,"
           "distance_adversarial,generators_original,generators_random,generators_adversarial,"
           "edges_original,edges_random,edges_adversarial,l2_adversarial,l2_random_pre_clip,l2_random\n";
    for (std::size_t i = 0; i < m; ++i) {
      const auto& a = adversaries[i];
      out << a.record.original_id << ',' << a.record.original_label << ',' << a.record.clean_prediction << ','
          << a.record.predicted_class << ',' << format_double(lifetime_weighted_distance(v_orig[i], v_orig[i])) << ','
          << format_double(lifetime_weighted_distance(v_orig[i], v_rnd[i])) << ','
          << format_double(lifetime_weighted_distance(v_orig[i], v_adv[i])) << ',' << gens[i][0] << ','
          << gens[i][1] << ',' << gens[i][2] << ',' << edges[i][0] << ',' << edges[i][1] << ',' << edges[i][2]
          << ',' << format_double(a.record.perturbation_l2) << ',' << format_double(a.random.pre_clip_norm) << ','
          << format_double(a.random.achieved_norm) << '\n';
    }
  }
  {
    std::ofstream out(store.reports_dir() + "/edge_diff_by_adversary.csv");
    if (!out) throw IoError("cannot write edge difference table");
    out << "id,clean_prediction,adversarial_prediction,added_edges";
    for (int cl = 0; cl < classes; ++cl) out << ",class_" << cl;
    out << '\n';
    for (std::size_t i = 0; i < m; ++i) {
      out << adversaries[i].record.original_id << ',' << adversaries[i].record.clean_prediction << ','
          << adversaries[i].record.predicted_class << ',' << added[i].size();
      for (int cl = 0; cl < classes; ++cl) out << ',' << format_double(per_adv(Eigen::Index(i), cl));
      out << '\n';
    }
  }
  write_matrix_csv(store.reports_dir() + "/edge_diff_similarity.csv", block, "predicted\\class");

  std::size_t more_edges = 0, more_edges_random = 0;
  double sum_adv = 0, sum_rnd = 0, max_norm_gap = 0;
  for (std::size_t i = 0; i < m; ++i) {
    more_edges += edges[i][2] > edges[i][0];
    more_edges_random += edges[i][1] > edges[i][0];
    sum_adv += lifetime_weighted_distance(v_orig[i], v_adv[i]);
    sum_rnd += lifetime_weighted_distance(v_orig[i], v_rnd[i]);
    max_norm_gap = std::max(max_norm_gap, std::fabs(adversaries[i].random.pre_clip_norm -
                                                    adversaries[i].record.perturbation_l2));
  }
  json r = provenance(c);
  r["format"] = "nntopo-perturb/1";
  r["adversaries"] = m;
  r["fraction_more_edges_adversarial"] = double(more_edges) / double(m);
  r["fraction_more_edges_random"] = double(more_edges_random) / double(m);
  r["mean_distance_adversarial"] = sum_adv / double(m);
  r["mean_distance_random"] = sum_rnd / double(m);
  r["max_pre_clip_norm_gap"] = max_norm_gap;
  r["empty_edge_differences"] = empty_diffs;
  r["universe_dimension"] = universe.size();
  store.write_json(store.reports_dir() + "/perturb.json", r);
  log << more_edges << "/" << m << " adversaries induce more generator edges than their original ("
      << r["fraction_more_edges_random"].get<double>() * 100.0 << "% for matched noise); mean distance to original "
      << r["mean_distance_adversarial"].get<double>() << " adversarial vs " << r["mean_distance_random"].get<double>()
      << " random\n";
  return r;
}

// ---------------------------------------------------------------------------
// diagram-distance

inline json cmd_diagram_distance(const RunConfig& c, std::ostream& log = std::cout) {
  const ArtifactStore store(c.output_dir);
  const auto adversaries = load_adversaries(store);
  if (adversaries.empty()) throw UsageError("adversary set is empty");
  load_topo_index(store, "adversarial");
  const auto bundle = require_model(store);

  const std::size_t m = adversaries.size();
  std::vector<double> linf_d(m), wass(m);
  parallel_for(m, [&](std::size_t i) {
    const auto& a = adversaries[i].record;
    const auto orig = compute_topology(bundle.spec, bundle.weights, a.original_image, a.original_id,
                                       c.graph_options());
    const auto adv = load_topo_diagram(store, "adversarial", a.original_id);
    linf_d[i] = a.perturbation_linf;
    wass[i] = wasserstein(truncate_top_k(orig.diagram, c.top_k), truncate_top_k(adv, c.top_k), c.wasserstein_q);
  });
  fs::create_directories(store.reports_dir());
  {
    std::ofstream out(store.reports_dir() + "/diagram_distance.csv");
    if (!out) throw IoError("cannot write diagram distance table");
    out << "id,linf,wasserstein\n";
    for (std::size_t i = 0; i < m; ++i)
      out << adversaries[i].record.original_id << ',' << format_double(linf_d[i]) << ',' << format_double(wass[i])
          << '\n';
  }
  json r = provenance(c);
  r["format"] = "nntopo-diagram-distance/1";
  r["adversaries"] = m;
  r["q"] = c.wasserstein_q;
  r["top_k"] = c.top_k;
  r["spearman"] = m >= 2 ? spearman(linf_d, wass) : 0.0;
  store.write_json(store.reports_dir() + "/diagram_distance.json", r);
  log << "Spearman rank correlation between input L-inf and diagram " << c.wasserstein_q
      << "-Wasserstein distance: " << r["spearman"].get<double>() << " over " << m << " adversaries\n";
  return r;
}

}  // namespace nntopo
