#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace graphbd {

// Undirected graph without self-loops. Edges are stored once as (u, v) with
// u < v, sorted lexicographically and deduplicated.
struct Graph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd node_features;  // node_count x feature_dim
  std::optional<int> graph_label;
  std::vector<int> node_labels;  // empty when the dataset has none

  int edge_count() const { return static_cast<int>(edges.size()); }
  int feature_dim() const { return static_cast<int>(node_features.cols()); }

  // Index of an undirected edge, or -1. Expects the canonical ordering.
  int edge_index(int u, int v) const;
  bool has_edge(int u, int v) const { return edge_index(u, v) >= 0; }

  std::vector<std::vector<int>> adjacency_list() const;
};

// Normalizes an edge list into the canonical form (u<v, sorted, unique) and
// throws MalformedDatasetError on self-loops or out-of-range endpoints.
std::vector<std::pair<int, int>> canonical_edges(
    int node_count, const std::vector<std::pair<int, int>>& raw);

// Throws if any Graph invariant is violated; used by loaders and tests.
void validate_graph(const Graph& g);

struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  int class_count = 0;

  int size() const { return static_cast<int>(graphs.size()); }
  int feature_dim() const {
    return graphs.empty() ? 0 : graphs.front().feature_dim();
  }
};

void validate_dataset(const GraphDataset& ds);

// Single-graph transductive classification task. Masks are empty (all false)
// until split_node_dataset assigns them.
struct NodeTaskDataset {
  std::string name;
  Graph graph;
  std::vector<char> train_mask;
  std::vector<char> test_mask;
  int class_count = 0;

  std::vector<int> train_nodes() const;
  std::vector<int> test_nodes() const;
};

void validate_node_dataset(const NodeTaskDataset& ds);

// Flattened directed view used by the message-passing layers: each undirected
// edge contributes both directions; undirected_id maps a directed slot back
// to its undirected edge (shared mask weights).
struct DirectedEdges {
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> undirected_id;

  int size() const { return static_cast<int>(src.size()); }
};

DirectedEdges directed_edges(const Graph& g);

// Nodes within `hops` of `center` (center included), ascending.
std::vector<int> k_hop_neighborhood(const Graph& g, int center, int hops);

// Induced subgraph on `nodes` (ascending, deduplicated by caller); node i of
// the result is nodes[i]. Features and labels are carried over.
Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes);

}  // namespace graphbd
