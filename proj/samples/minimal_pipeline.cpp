// Train a tiny dense network on synthetic blobs, then compute the persistent
// subgraphs of two inputs and compare them.

#include <iostream>

#include "nntopo/nntopo.hpp"

int main() {
  using namespace nntopo;
  const auto data = synthetic_blobs(3, 40, 8, 4.0, 1);

  NetworkSpec spec;
  spec.input_shape = {8};
  spec.layers = {Dense{8, 12, Activation::relu}, Dense{12, 3, Activation::relu}};

  TrainOptions opt;
  opt.epochs = 30;
  opt.learning_rate = 0.05;
  opt.seed = 2;
  const auto trained = sgd_train(spec, init_weights(spec, 1), data, opt);
  std::cout << "training accuracy " << accuracy(spec, trained.weights, data) << "\n";

  std::vector<InducedGraph> graphs;
  std::vector<PersistenceResult> results;
  for (std::size_t i : {0, 50}) {
    const auto rec = forward(spec, trained.weights, data.images[i]);
    graphs.push_back(build_induced_graph(spec, trained.weights, rec, {}));
    results.push_back(compute_persistence(graphs.back()));
    std::cout << data.ids[i] << ": " << graphs.back().edges.size() << " edges, " << results.back().pairs.size()
              << " generators\n";
  }

  const auto universe = EdgeUniverse::from_graphs(graphs);
  const auto a = vectorize(graphs[0], results[0], universe, VectorMode::lifetime_weighted);
  const auto b = vectorize(graphs[1], results[1], universe, VectorMode::lifetime_weighted);
  std::cout << "lifetime-weighted distance " << lifetime_weighted_distance(a, b) << "\n";
  std::cout << "2-Wasserstein distance " << wasserstein(to_diagram(results[0]), to_diagram(results[1])) << "\n";
  std::cout << "bottleneck distance " << bottleneck(to_diagram(results[0]), to_diagram(results[1])) << "\n";
}
