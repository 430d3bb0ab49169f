#include "synthetic.hpp"

#include <fstream>
#include <random>

#include "graphbd/dataset_io.hpp"
#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"

namespace graphbd::testsupport {

namespace {

constexpr std::uint64_t kMotifTag = 0x4d4f5449;    // per-graph streams
constexpr std::uint64_t kFeatureTag = 0x46454154;  // node-task features

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {  // inclusive bounds
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

}  // namespace

GraphDataset make_motif_dataset(int graph_count, std::uint64_t seed,
                                std::vector<std::vector<char>>* motif_nodes) {
  GraphDataset data;
  data.name = "motif";
  data.class_count = 2;
  if (motif_nodes) motif_nodes->clear();
  for (int i = 0; i < graph_count; ++i) {
    Rng rng = make_rng(derive_seed(seed, kMotifTag, static_cast<std::uint64_t>(i)));
    const int base = uniform_int(rng, 6, 10);
    const int label = i % 2;
    Graph g;
    g.node_count = base + 5;
    std::vector<std::pair<int, int>> edges;
    for (int v = 1; v < base; ++v) edges.emplace_back(uniform_int(rng, 0, v - 1), v);
    const int anchor = uniform_int(rng, 0, base - 1);
    if (label == 1) {
      for (int a = 0; a < 5; ++a) {
        for (int b = a + 1; b < 5; ++b) edges.emplace_back(base + a, base + b);
      }
      edges.emplace_back(anchor, base);
    } else {
      for (int a = 0; a < 4; ++a) edges.emplace_back(base + a, base + a + 1);
      edges.emplace_back(anchor, base);
    }
    g.edges = canonical_edges(g.node_count, edges);
    g.node_features = Eigen::MatrixXd::Ones(g.node_count, 1);
    g.graph_label = label;
    data.graphs.push_back(std::move(g));
    if (motif_nodes) {
      std::vector<char> members(base + 5, 0);
      for (int a = 0; a < 5; ++a) members[base + a] = 1;
      motif_nodes->push_back(std::move(members));
    }
  }
  return data;
}

NodeTaskDataset make_feature_dataset(int node_count, int feature_dim, int informative,
                                     std::uint64_t seed) {
  if (informative < 0 || informative >= feature_dim) {
    throw ArgumentError("informative feature out of range");
  }
  Rng rng = make_rng(derive_seed(seed, kFeatureTag));
  NodeTaskDataset data;
  data.name = "feature_task";
  data.class_count = 2;
  Graph& g = data.graph;
  g.node_count = node_count;
  std::vector<std::pair<int, int>> edges;
  for (int v = 0; v < node_count; ++v) edges.emplace_back(v, (v + 1) % node_count);
  const int chords = node_count;  // double the ring's edge budget with chords
  for (int c = 0; c < chords; ++c) {
    const int a = uniform_int(rng, 0, node_count - 1);
    const int b = uniform_int(rng, 0, node_count - 1);
    if (a != b) edges.emplace_back(a, b);
  }
  g.edges = canonical_edges(node_count, edges);
  g.node_features = Eigen::MatrixXd::NullaryExpr(
      node_count, feature_dim, [&rng](Eigen::Index, Eigen::Index) { return 0.0; });
  for (int v = 0; v < node_count; ++v) {
    for (int f = 0; f < feature_dim; ++f) g.node_features(v, f) = uniform01(rng);
  }
  g.node_labels.resize(node_count);
  for (int v = 0; v < node_count; ++v) {
    g.node_labels[v] = g.node_features(v, informative) > 0.5 ? 1 : 0;
  }
  data.train_mask.assign(node_count, 0);
  data.test_mask.assign(node_count, 0);
  return data;
}

GnnModel make_feature_probe_model(int feature_dim, int informative) {
  ModelConfig config;
  config.architecture = Architecture::GraphSage;
  config.layer_count = 2;
  config.hidden_dim = 4;
  config.readout = Readout::Mean;
  config.dropout = 0.0;
  GnnModel model(config, TaskKind::NodeClassification, feature_dim, 2);

  // z1[:,0] = relu(x[informative]); z2[:,0] = z1[:,0]; logits spread around
  // the 0.5 threshold with a sharp slope.
  constexpr double kSlope = 10.0;
  std::vector<Eigen::MatrixXd> params = model.parameters();
  const std::vector<std::string>& names = model.parameter_names();
  for (size_t i = 0; i < names.size(); ++i) {
    params[i].setZero();
    if (names[i] == "layer0.w_self") params[i](informative, 0) = 1.0;
    if (names[i] == "layer1.w_self") params[i](0, 0) = 1.0;
    if (names[i] == "head.w") {
      params[i](0, 0) = -kSlope;
      params[i](0, 1) = kSlope;
    }
    if (names[i] == "head.b") {
      params[i](0, 0) = 0.5 * kSlope;
      params[i](0, 1) = -0.5 * kSlope;
    }
  }
  model.set_parameters(std::move(params));
  return model;
}

Graph make_random_graph(int node_count, double edge_prob, std::uint64_t seed,
                        int feature_dim) {
  Rng rng = make_rng(seed);
  Graph g;
  g.node_count = node_count;
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < node_count; ++a) {
    for (int b = a + 1; b < node_count; ++b) {
      if (uniform01(rng) < edge_prob) edges.emplace_back(a, b);
    }
  }
  g.edges = canonical_edges(node_count, edges);
  g.node_features = Eigen::MatrixXd::Zero(node_count, feature_dim);
  for (int v = 0; v < node_count; ++v) {
    for (int f = 0; f < feature_dim; ++f) g.node_features(v, f) = uniform01(rng);
  }
  return g;
}

GraphDataset write_tu_fixture(const std::filesystem::path& dir, const std::string& name,
                              int graph_count, std::uint64_t seed) {
  GraphDataset data = make_motif_dataset(graph_count, seed);
  data.name = name;
  std::filesystem::create_directories(dir);
  save_tu_dataset(data, dir);
  return data;
}

void write_citation_fixture(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  Rng rng = make_rng(0xC17A);
  std::ofstream content(dir / (name + ".content"));
  const char* classes[3] = {"ai", "genetics", "theory"};
  for (int v = 0; v < 40; ++v) {
    const int cls = v % 3;
    content << "paper" << 100 + v;
    for (int f = 0; f < 6; ++f) {
      // Two indicator columns per class plus sparse noise.
      int bit = (f / 2 == cls) ? 1 : (uniform01(rng) < 0.1 ? 1 : 0);
      content << "\t" << bit;
    }
    content << "\t" << classes[cls] << "\n";
  }
  content.close();
  std::ofstream cites(dir / (name + ".cites"));
  for (int v = 0; v < 40; ++v) {
    // Ring plus same-class skip links; <from> cites <to>.
    cites << "paper" << 100 + v << "\tpaper" << 100 + (v + 1) % 40 << "\n";
    if (v + 3 < 40) cites << "paper" << 100 + v << "\tpaper" << 100 + v + 3 << "\n";
  }
  cites << "paper99999\tpaper100\n";   // unknown source
  cites << "paper100\tpaper88888\n";   // unknown target
  cites.close();
}

double ranking_auc(const Eigen::VectorXd& scores, const std::vector<char>& positive) {
  double wins = 0.0;
  int pairs = 0;
  for (Eigen::Index p = 0; p < scores.size(); ++p) {
    if (!positive[static_cast<size_t>(p)]) continue;
    for (Eigen::Index q = 0; q < scores.size(); ++q) {
      if (positive[static_cast<size_t>(q)]) continue;
      ++pairs;
      if (scores(p) > scores(q)) {
        wins += 1.0;
      } else if (scores(p) == scores(q)) {
        wins += 0.5;
      }
    }
  }
  if (pairs == 0) throw ArgumentError("ranking_auc needs both classes");
  return wins / pairs;
}

}  // namespace graphbd::testsupport
