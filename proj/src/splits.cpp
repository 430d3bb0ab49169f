#include "graphbd/splits.hpp"

#include <cmath>

#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {
namespace {

constexpr std::uint64_t kSplitTag = 0x53504c4954ULL;  // "SPLIT"

void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw ArgumentError("train_fraction must lie in (0,1), got " + std::to_string(f));
  }
}

}  // namespace

std::pair<GraphDataset, GraphDataset> split_graph_dataset(
    const GraphDataset& dataset, double train_fraction, std::uint64_t seed) {
  check_fraction(train_fraction);
  if (dataset.graphs.empty()) throw ArgumentError("cannot split an empty dataset");

  const int n = dataset.size();
  const int k = static_cast<int>(std::floor(train_fraction * n));
  if (k == 0) {
    throw DegenerateInputError("train split would be empty (" +
                               std::to_string(n) + " graphs at fraction " +
                               std::to_string(train_fraction) + ")");
  }
  auto rng = make_rng(derive_seed(seed, kSplitTag));
  auto picked = sample_without_replacement(n, k, rng);

  std::vector<char> in_train(n, 0);
  for (int i : picked) in_train[i] = 1;

  GraphDataset train{dataset.name, {}, dataset.class_count};
  GraphDataset test{dataset.name, {}, dataset.class_count};
  for (int i = 0; i < n; ++i) {
    (in_train[i] ? train : test).graphs.push_back(dataset.graphs[i]);
  }
  return {std::move(train), std::move(test)};
}

NodeTaskDataset split_node_dataset(const NodeTaskDataset& dataset,
                                   double train_fraction, std::uint64_t seed) {
  check_fraction(train_fraction);
  const int n = dataset.graph.node_count;
  if (n == 0) throw ArgumentError("cannot split an empty dataset");

  const int k = static_cast<int>(std::floor(train_fraction * n));
  if (k == 0) {
    throw DegenerateInputError("train mask would be empty (" + std::to_string(n) +
                               " nodes at fraction " +
                               std::to_string(train_fraction) + ")");
  }
  auto rng = make_rng(derive_seed(seed, kSplitTag));
  auto picked = sample_without_replacement(n, k, rng);

  NodeTaskDataset out = dataset;
  out.train_mask.assign(n, 0);
  out.test_mask.assign(n, 1);
  for (int i : picked) {
    out.train_mask[i] = 1;
    out.test_mask[i] = 0;
  }
  return out;
}

}  // namespace graphbd
