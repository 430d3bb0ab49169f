#include "graphbd/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>

#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Config: return "config";
    case Phase::Load: return "load";
    case Phase::Split: return "split";
    case Phase::TrainClean: return "train-clean";
    case Phase::Explain: return "explain";
    case Phase::Poison: return "poison";
    case Phase::TrainBackdoor: return "train-backdoor";
    case Phase::Evaluate: return "evaluate";
    case Phase::Io: return "io";
  }
  return "unknown";
}

std::vector<int> sample_without_replacement(int n, int k, Rng& rng) {
  if (k < 0 || k > n) {
    throw ArgumentError("sample_without_replacement: k=" + std::to_string(k) +
                        " out of range for n=" + std::to_string(n));
  }
  std::vector<int> pool(n);
  for (int i = 0; i < n; ++i) pool[i] = i;
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> dist(i, n - 1);
    std::swap(pool[i], pool[dist(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

int Graph::edge_index(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
  if (it != edges.end() && *it == std::make_pair(u, v)) {
    return static_cast<int>(it - edges.begin());
  }
  return -1;
}

std::vector<std::vector<int>> Graph::adjacency_list() const {
  std::vector<std::vector<int>> adj(node_count);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

std::vector<std::pair<int, int>> canonical_edges(
    int node_count, const std::vector<std::pair<int, int>>& raw) {
  std::vector<std::pair<int, int>> out;
  out.reserve(raw.size());
  for (auto [u, v] : raw) {
    if (u == v) {
      throw MalformedDatasetError("self-loop on node " + std::to_string(u));
    }
    if (u < 0 || v < 0 || u >= node_count || v >= node_count) {
      throw MalformedDatasetError("edge (" + std::to_string(u) + ", " +
                                  std::to_string(v) + ") references unknown node");
    }
    if (u > v) std::swap(u, v);
    out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void validate_graph(const Graph& g) {
  if (g.node_count < 0) throw MalformedDatasetError("negative node count");
  if (g.node_features.rows() != g.node_count) {
    throw MalformedDatasetError("feature matrix has " +
                                std::to_string(g.node_features.rows()) +
                                " rows for " + std::to_string(g.node_count) +
                                " nodes");
  }
  std::pair<int, int> prev{-1, -1};
  for (const auto& e : g.edges) {
    if (e.first == e.second) {
      throw MalformedDatasetError("self-loop on node " + std::to_string(e.first));
    }
    if (e.first > e.second) {
      throw MalformedDatasetError("edge not stored as (min, max)");
    }
    if (e.first < 0 || e.second >= g.node_count) {
      throw MalformedDatasetError("edge endpoint out of range");
    }
    if (!(prev < e)) throw MalformedDatasetError("edges not sorted/unique");
    prev = e;
  }
  if (!g.node_labels.empty() &&
      static_cast<int>(g.node_labels.size()) != g.node_count) {
    throw MalformedDatasetError("node label count mismatch");
  }
}

void validate_dataset(const GraphDataset& ds) {
  if (ds.class_count <= 0) throw MalformedDatasetError("class_count must be positive");
  int dim = ds.feature_dim();
  for (const auto& g : ds.graphs) {
    validate_graph(g);
    if (g.feature_dim() != dim) {
      throw MalformedDatasetError("inconsistent feature_dim across graphs");
    }
    if (!g.graph_label || *g.graph_label < 0 || *g.graph_label >= ds.class_count) {
      throw MalformedDatasetError("graph label missing or out of range");
    }
  }
}

void validate_node_dataset(const NodeTaskDataset& ds) {
  validate_graph(ds.graph);
  if (ds.class_count <= 0) throw MalformedDatasetError("class_count must be positive");
  int n = ds.graph.node_count;
  if (static_cast<int>(ds.train_mask.size()) != n ||
      static_cast<int>(ds.test_mask.size()) != n) {
    throw MalformedDatasetError("mask length mismatch");
  }
  if (static_cast<int>(ds.graph.node_labels.size()) != n) {
    throw MalformedDatasetError("node task requires node labels");
  }
  for (int i = 0; i < n; ++i) {
    if (ds.train_mask[i] && ds.test_mask[i]) {
      throw MalformedDatasetError("node " + std::to_string(i) +
                                  " in both train and test masks");
    }
    int y = ds.graph.node_labels[i];
    if (y < 0 || y >= ds.class_count) {
      throw MalformedDatasetError("node label out of range");
    }
  }
}

std::vector<int> NodeTaskDataset::train_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < graph.node_count; ++i) {
    if (train_mask[i]) out.push_back(i);
  }
  return out;
}

std::vector<int> NodeTaskDataset::test_nodes() const {
  std::vector<int> out;
  for (int i = 0; i < graph.node_count; ++i) {
    if (test_mask[i]) out.push_back(i);
  }
  return out;
}

DirectedEdges directed_edges(const Graph& g) {
  DirectedEdges d;
  d.src.reserve(2 * g.edges.size());
  d.dst.reserve(2 * g.edges.size());
  d.undirected_id.reserve(2 * g.edges.size());
  for (int e = 0; e < g.edge_count(); ++e) {
    auto [u, v] = g.edges[e];
    d.src.push_back(u);
    d.dst.push_back(v);
    d.undirected_id.push_back(e);
    d.src.push_back(v);
    d.dst.push_back(u);
    d.undirected_id.push_back(e);
  }
  return d;
}

std::vector<int> k_hop_neighborhood(const Graph& g, int center, int hops) {
  if (center < 0 || center >= g.node_count) {
    throw ArgumentError("k_hop_neighborhood: node out of range");
  }
  if (hops < 0) throw ArgumentError("k_hop_neighborhood: negative hop count");
  auto adj = g.adjacency_list();
  std::vector<int> dist(g.node_count, -1);
  std::deque<int> queue{center};
  dist[center] = 0;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    if (dist[u] == hops) continue;
    for (int v : adj[u]) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < g.node_count; ++i) {
    if (dist[i] >= 0) out.push_back(i);
  }
  return out;
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& nodes) {
  std::vector<int> remap(g.node_count, -1);
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    int v = nodes[i];
    if (v < 0 || v >= g.node_count) throw ArgumentError("subgraph node out of range");
    if (i > 0 && nodes[i - 1] >= v) {
      throw ArgumentError("subgraph nodes must be strictly ascending");
    }
    remap[v] = i;
  }
  Graph sub;
  sub.node_count = static_cast<int>(nodes.size());
  sub.node_features.resize(sub.node_count, g.node_features.cols());
  for (int i = 0; i < sub.node_count; ++i) {
    sub.node_features.row(i) = g.node_features.row(nodes[i]);
  }
  for (const auto& [u, v] : g.edges) {
    if (remap[u] >= 0 && remap[v] >= 0) {
      sub.edges.emplace_back(std::min(remap[u], remap[v]),
                             std::max(remap[u], remap[v]));
    }
  }
  std::sort(sub.edges.begin(), sub.edges.end());
  sub.graph_label = g.graph_label;
  if (!g.node_labels.empty()) {
    sub.node_labels.resize(sub.node_count);
    for (int i = 0; i < sub.node_count; ++i) {
      sub.node_labels[i] = g.node_labels[nodes[i]];
    }
  }
  return sub;
}

}  // namespace graphbd
