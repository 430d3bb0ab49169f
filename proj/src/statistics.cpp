#include "graphbd/statistics.hpp"

#include <cstdio>
#include <sstream>

namespace graphbd {

DatasetStatistics dataset_statistics(const GraphDataset& ds) {
  DatasetStatistics s;
  s.graph_count = ds.size();
  if (ds.graphs.empty()) return s;
  long nodes = 0, edges = 0;
  for (const auto& g : ds.graphs) {
    nodes += g.node_count;
    edges += g.edge_count();
    if (g.graph_label) ++s.class_histogram[*g.graph_label];
  }
  s.avg_nodes = static_cast<double>(nodes) / ds.size();
  s.avg_edges = static_cast<double>(edges) / ds.size();
  return s;
}

DatasetStatistics dataset_statistics(const NodeTaskDataset& ds) {
  DatasetStatistics s;
  s.graph_count = 1;
  s.avg_nodes = ds.graph.node_count;
  s.avg_edges = ds.graph.edge_count();
  for (int y : ds.graph.node_labels) ++s.class_histogram[y];
  return s;
}

std::string statistics_csv(const std::string& dataset_name,
                           const DatasetStatistics& s) {
  std::ostringstream out;
  out << "dataset,graph_count,avg_nodes,avg_edges,class,count\n";
  char buf[64];
  for (const auto& [cls, count] : s.class_histogram) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g", s.avg_nodes, s.avg_edges);
    out << dataset_name << ',' << s.graph_count << ',' << buf << ',' << cls << ','
        << count << "\n";
  }
  return out.str();
}

}  // namespace graphbd
