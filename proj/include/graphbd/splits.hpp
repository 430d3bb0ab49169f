#pragma once

#include <cstdint>
#include <utility>

#include "graphbd/graph.hpp"

namespace graphbd {

// Uniform random split without replacement; |train| = floor(fraction * size).
// Members keep the dataset order. Same seed, same split.
std::pair<GraphDataset, GraphDataset> split_graph_dataset(
    const GraphDataset& dataset, double train_fraction, std::uint64_t seed);

// Same at node granularity: floor(fraction * node_count) train nodes,
// test_mask = complement.
NodeTaskDataset split_node_dataset(const NodeTaskDataset& dataset,
                                   double train_fraction, std::uint64_t seed);

}  // namespace graphbd
