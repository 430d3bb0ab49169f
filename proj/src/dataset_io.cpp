#include "graphbd/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "graphbd/error.hpp"

namespace graphbd {
namespace {

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) {
    throw IngestionError("missing dataset file: " + p.string());
  }
  return in;
}

std::vector<long> read_int_column(const std::filesystem::path& p) {
  auto in = open_or_throw(p);
  std::vector<long> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(std::stol(line));
    } catch (const std::exception&) {
      throw MalformedDatasetError(p.string() + ":" + std::to_string(lineno) +
                                  ": expected an integer");
    }
  }
  return out;
}

std::string dataset_basename(const std::filesystem::path& dir,
                             const std::string& name) {
  if (!name.empty()) return name;
  auto base = dir.filename().string();
  if (base.empty()) base = dir.parent_path().filename().string();
  return base;
}

}  // namespace

GraphDataset load_tu_dataset(const std::filesystem::path& directory,
                             const std::string& name) {
  const std::string base = dataset_basename(directory, name);
  const auto file = [&](const char* suffix) { return directory / (base + suffix); };

  auto indicator = read_int_column(file("_graph_indicator.txt"));
  auto labels = read_int_column(file("_graph_labels.txt"));

  const int total_nodes = static_cast<int>(indicator.size());
  const int graph_count = static_cast<int>(labels.size());
  if (graph_count == 0) throw MalformedDatasetError(base + ": no graphs");

  // graph ids are 1-indexed and contiguous
  std::vector<int> graph_of_node(total_nodes);
  std::vector<int> nodes_per_graph(graph_count, 0);
  for (int i = 0; i < total_nodes; ++i) {
    long gid = indicator[i];
    if (gid < 1 || gid > graph_count) {
      throw MalformedDatasetError(base + ": graph indicator " + std::to_string(gid) +
                                  " out of range");
    }
    graph_of_node[i] = static_cast<int>(gid - 1);
    ++nodes_per_graph[gid - 1];
  }
  // global node id -> local index within its graph
  std::vector<int> local_id(total_nodes);
  {
    std::vector<int> next(graph_count, 0);
    for (int i = 0; i < total_nodes; ++i) local_id[i] = next[graph_of_node[i]]++;
  }

  // optional node labels -> one-hot features
  std::vector<long> node_labels;
  bool has_node_labels = std::filesystem::exists(file("_node_labels.txt"));
  if (has_node_labels) {
    node_labels = read_int_column(file("_node_labels.txt"));
    if (static_cast<int>(node_labels.size()) != total_nodes) {
      throw MalformedDatasetError(base + ": node label count != node count");
    }
  }
  std::map<long, int> label_value_to_index;
  if (has_node_labels) {
    for (long v : node_labels) label_value_to_index.emplace(v, 0);
    int next = 0;
    for (auto& [value, index] : label_value_to_index) index = next++;
  }
  const int feature_dim = has_node_labels
                              ? static_cast<int>(label_value_to_index.size())
                              : 1;

  GraphDataset ds;
  ds.name = base;
  ds.graphs.resize(graph_count);
  for (int gi = 0; gi < graph_count; ++gi) {
    Graph& g = ds.graphs[gi];
    g.node_count = nodes_per_graph[gi];
    g.node_features = Eigen::MatrixXd::Zero(g.node_count, feature_dim);
    if (!has_node_labels) g.node_features.col(0).setOnes();
  }
  if (has_node_labels) {
    for (int i = 0; i < total_nodes; ++i) {
      Graph& g = ds.graphs[graph_of_node[i]];
      int lab = label_value_to_index.at(node_labels[i]);
      g.node_features(local_id[i], lab) = 1.0;
      g.node_labels.push_back(0);  // sized below
    }
    for (int i = 0; i < total_nodes; ++i) {
      ds.graphs[graph_of_node[i]].node_labels[local_id[i]] =
          label_value_to_index.at(node_labels[i]);
    }
  }

  // edges: 1-indexed "u, v" arcs
  {
    auto in = open_or_throw(file("_A.txt"));
    std::vector<std::vector<std::pair<int, int>>> per_graph(graph_count);
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      long a = 0, b = 0;
      if (!(ss >> a >> b)) {
        throw MalformedDatasetError(base + "_A.txt:" + std::to_string(lineno) +
                                    ": cannot parse edge");
      }
      if (a < 1 || b < 1 || a > total_nodes || b > total_nodes) {
        throw MalformedDatasetError(base + "_A.txt:" + std::to_string(lineno) +
                                    ": edge references unknown node");
      }
      int u = static_cast<int>(a - 1), v = static_cast<int>(b - 1);
      if (graph_of_node[u] != graph_of_node[v]) {
        throw MalformedDatasetError(base + "_A.txt:" + std::to_string(lineno) +
                                    ": edge crosses graph boundary");
      }
      per_graph[graph_of_node[u]].emplace_back(local_id[u], local_id[v]);
    }
    for (int gi = 0; gi < graph_count; ++gi) {
      ds.graphs[gi].edges = canonical_edges(ds.graphs[gi].node_count, per_graph[gi]);
    }
  }

  // graph labels -> contiguous 0-based, numeric order preserved
  {
    std::map<long, int> remap;
    for (long v : labels) remap.emplace(v, 0);
    int next = 0;
    for (auto& [value, index] : remap) index = next++;
    for (int gi = 0; gi < graph_count; ++gi) {
      ds.graphs[gi].graph_label = remap.at(labels[gi]);
    }
    ds.class_count = next;
  }

  validate_dataset(ds);
  return ds;
}

void save_tu_dataset(const GraphDataset& ds, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const std::string base = ds.name.empty() ? std::string("dataset") : ds.name;
  std::ofstream a(directory / (base + "_A.txt"));
  std::ofstream ind(directory / (base + "_graph_indicator.txt"));
  std::ofstream gl(directory / (base + "_graph_labels.txt"));
  if (!a || !ind || !gl) {
    throw IngestionError("cannot write TU files under " + directory.string());
  }
  bool any_node_labels = false;
  for (const auto& g : ds.graphs) any_node_labels |= !g.node_labels.empty();
  std::ofstream nl;
  if (any_node_labels) {
    nl.open(directory / (base + "_node_labels.txt"));
  }

  long offset = 0;
  for (int gi = 0; gi < ds.size(); ++gi) {
    const Graph& g = ds.graphs[gi];
    for (const auto& [u, v] : g.edges) {
      a << (offset + u + 1) << ", " << (offset + v + 1) << "\n";
      a << (offset + v + 1) << ", " << (offset + u + 1) << "\n";
    }
    for (int i = 0; i < g.node_count; ++i) {
      ind << (gi + 1) << "\n";
      if (any_node_labels) {
        nl << (g.node_labels.empty() ? 0 : g.node_labels[i]) << "\n";
      }
    }
    gl << *g.graph_label << "\n";
    offset += g.node_count;
  }
}

NodeTaskDataset load_citation_dataset(const std::filesystem::path& directory,
                                      const std::string& name,
                                      CitationLoadStats* stats) {
  const std::string base = dataset_basename(directory, name);
  auto content = open_or_throw(directory / (base + ".content"));

  std::vector<std::string> ids;
  std::vector<std::vector<double>> features;
  std::vector<std::string> classes;
  std::unordered_map<std::string, int> id_to_index;

  std::string line;
  long lineno = 0;
  while (std::getline(content, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (ss >> tok) tokens.push_back(tok);
    if (tokens.size() < 3) {
      throw MalformedDatasetError(base + ".content:" + std::to_string(lineno) +
                                  ": expected id, features, class");
    }
    const std::string& id = tokens.front();
    if (!id_to_index.emplace(id, static_cast<int>(ids.size())).second) {
      throw MalformedDatasetError(base + ".content: duplicate node id " + id);
    }
    ids.push_back(id);
    std::vector<double> row(tokens.size() - 2);
    for (size_t i = 1; i + 1 < tokens.size(); ++i) {
      row[i - 1] = std::stod(tokens[i]);
    }
    features.push_back(std::move(row));
    classes.push_back(tokens.back());
  }
  const int n = static_cast<int>(ids.size());
  if (n == 0) throw MalformedDatasetError(base + ".content: empty");
  const size_t d = features.front().size();
  for (const auto& row : features) {
    if (row.size() != d) {
      throw MalformedDatasetError(base + ".content: ragged feature rows");
    }
  }

  std::map<std::string, int> class_to_index;
  for (const auto& c : classes) class_to_index.emplace(c, 0);
  int next_class = 0;
  for (auto& [cls, idx] : class_to_index) idx = next_class++;

  NodeTaskDataset ds;
  ds.name = base;
  ds.class_count = next_class;
  ds.graph.node_count = n;
  ds.graph.node_features.resize(n, static_cast<int>(d));
  ds.graph.node_labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) ds.graph.node_features(i, j) = features[i][j];
    ds.graph.node_labels[i] = class_to_index.at(classes[i]);
  }

  auto cites = open_or_throw(directory / (base + ".cites"));
  std::vector<std::pair<int, int>> raw;
  int dropped = 0;
  lineno = 0;
  while (std::getline(cites, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!(ss >> a >> b)) {
      throw MalformedDatasetError(base + ".cites:" + std::to_string(lineno) +
                                  ": cannot parse pair");
    }
    auto ia = id_to_index.find(a);
    auto ib = id_to_index.find(b);
    if (ia == id_to_index.end() || ib == id_to_index.end() ||
        ia->second == ib->second) {
      ++dropped;  // unknown id or self-citation
      continue;
    }
    raw.emplace_back(ia->second, ib->second);
  }
  ds.graph.edges = canonical_edges(n, raw);
  ds.train_mask.assign(n, 0);
  ds.test_mask.assign(n, 0);
  if (stats) stats->dropped_edges = dropped;
  validate_node_dataset(ds);
  return ds;
}

}  // namespace graphbd
