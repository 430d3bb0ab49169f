#pragma once

#include <map>
#include <string>

#include "graphbd/graph.hpp"

namespace graphbd {

struct DatasetStatistics {
  int graph_count = 0;
  double avg_nodes = 0.0;
  double avg_edges = 0.0;  // undirected edges
  std::map<int, int> class_histogram;
};

DatasetStatistics dataset_statistics(const GraphDataset& ds);

// Single-graph view: graph_count 1, averages are the node/edge counts, the
// histogram is over node labels.
DatasetStatistics dataset_statistics(const NodeTaskDataset& ds);

std::string statistics_csv(const std::string& dataset_name,
                           const DatasetStatistics& s);

}  // namespace graphbd
