#include "graphbd/poison.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "graphbd/error.hpp"
#include "graphbd/explain_hsic.hpp"
#include "graphbd/explain_mask.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {

namespace {

constexpr std::uint64_t kPickTag = 0x5049434b;     // which items get poisoned
constexpr std::uint64_t kSelectTag = 0x53454c43;   // RSA position choice per item
constexpr std::uint64_t kExplainTag = 0x45585054;  // per-item explainer stream
constexpr std::uint64_t kTestTag = 0x54455354;     // test-time injection streams
constexpr std::uint64_t kFeatTag = 0x46454154;     // shared feature trigger

int round_half_up_positive(double x) { return static_cast<int>(std::floor(x + 0.5)); }

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Indices of the t extreme scores; largest for MIA, smallest for LIA, ties
// toward the lower index. Output ascending.
std::vector<int> extreme_indices(const Eigen::VectorXd& scores, int t, bool largest) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores(a) != scores(b)) return largest ? scores(a) > scores(b) : scores(a) < scores(b);
    return a < b;
  });
  order.resize(t);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

std::string to_string(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::Rsa: return "rsa";
    case SelectionStrategy::Mia: return "mia";
    case SelectionStrategy::Lia: return "lia";
  }
  return "?";
}

SelectionStrategy strategy_from_string(const std::string& name) {
  std::string s;
  for (char c : name) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "rsa") return SelectionStrategy::Rsa;
  if (s == "mia") return SelectionStrategy::Mia;
  if (s == "lia") return SelectionStrategy::Lia;
  throw ArgumentError("unknown strategy '" + name + "' (expected rsa, mia, or lia)");
}

void validate_attack_config(const AttackConfig& c, int class_count) {
  if (c.target_class < 0 || c.target_class >= class_count) {
    throw ArgumentError("target class " + std::to_string(c.target_class) +
                        " is outside the dataset's " + std::to_string(class_count) + " classes");
  }
  auto fraction = [](double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) {
      throw ArgumentError(std::string(name) + " must be in (0,1]");
    }
  };
  if (c.task == TaskKind::GraphClassification) {
    fraction(c.gamma, "gamma");
    fraction(c.eta, "eta");
    if (!(c.rho >= 0.0 && c.rho <= 1.0)) throw ArgumentError("rho must be in [0,1]");
  } else {
    fraction(c.poison_fraction, "poison_fraction");
    fraction(c.feature_fraction, "feature_fraction");
  }
}

std::optional<std::vector<int>> select_trigger_nodes(const Graph& graph,
                                                     const ImportanceScores* importance,
                                                     int t, SelectionStrategy strategy,
                                                     std::uint64_t seed) {
  if (t < 1) throw ArgumentError("select_trigger_nodes: t must be positive");
  if (t > graph.node_count) return std::nullopt;
  if (strategy == SelectionStrategy::Rsa) {
    Rng rng = make_rng(seed);
    return sample_without_replacement(graph.node_count, t, rng);
  }
  if (importance == nullptr) {
    throw ArgumentError("select_trigger_nodes: importance scores required for " +
                        to_string(strategy));
  }
  if (importance->scores.size() != graph.node_count) {
    throw ShapeError("select_trigger_nodes: importance length must equal node count");
  }
  return extreme_indices(importance->scores, t, strategy == SelectionStrategy::Mia);
}

Graph inject_graph_trigger(const Graph& graph, const std::vector<int>& nodes,
                           const TriggerGraph& trigger) {
  if (static_cast<int>(nodes.size()) != trigger.node_count) {
    throw ArgumentError("inject_graph_trigger: " + std::to_string(nodes.size()) +
                        " nodes given for a " + std::to_string(trigger.node_count) +
                        "-node trigger");
  }
  std::vector<int> mapped = nodes;
  std::sort(mapped.begin(), mapped.end());
  for (size_t i = 0; i < mapped.size(); ++i) {
    if (mapped[i] < 0 || mapped[i] >= graph.node_count) {
      throw ArgumentError("inject_graph_trigger: node out of range");
    }
    if (i > 0 && mapped[i] == mapped[i - 1]) {
      throw ArgumentError("inject_graph_trigger: duplicate node");
    }
  }
  std::vector<char> selected(graph.node_count, 0);
  for (int v : mapped) selected[v] = 1;

  Graph out = graph;
  out.edges.clear();
  for (const auto& [u, v] : graph.edges) {
    if (selected[u] && selected[v]) continue;  // replaced by the trigger
    out.edges.emplace_back(u, v);
  }
  for (const auto& [i, j] : trigger.edges) {
    if (i < 0 || j < 0 || i >= trigger.node_count || j >= trigger.node_count || i == j) {
      throw ArgumentError("inject_graph_trigger: malformed trigger edge");
    }
    int u = mapped[i], v = mapped[j];
    out.edges.emplace_back(std::min(u, v), std::max(u, v));
  }
  out.edges = canonical_edges(out.node_count, out.edges);
  return out;
}

std::vector<int> select_trigger_features(const ImportanceScores* importance, int n,
                                         SelectionStrategy strategy, std::uint64_t seed,
                                         int feature_dim) {
  if (n < 1) throw ArgumentError("select_trigger_features: n must be positive");
  if (n > feature_dim) {
    throw ArgumentError("select_trigger_features: n exceeds the feature dimension");
  }
  if (strategy == SelectionStrategy::Rsa) {
    Rng rng = make_rng(seed);
    return sample_without_replacement(feature_dim, n, rng);
  }
  if (importance == nullptr) {
    throw ArgumentError("select_trigger_features: importance scores required for " +
                        to_string(strategy));
  }
  if (importance->scores.size() != feature_dim) {
    throw ShapeError("select_trigger_features: importance length must equal feature dim");
  }
  return extreme_indices(importance->scores, n, strategy == SelectionStrategy::Mia);
}

Eigen::RowVectorXd inject_feature_trigger(const Eigen::RowVectorXd& features,
                                          const FeatureTrigger& trigger) {
  Eigen::RowVectorXd out = features;
  for (int i : trigger.indices) {
    if (i < 0 || i >= features.size()) {
      throw ArgumentError("inject_feature_trigger: index " + std::to_string(i) +
                          " outside feature vector of size " + std::to_string(features.size()));
    }
    out(i) = trigger.fill_value;
  }
  return out;
}

std::string manifest_to_text(const std::vector<PoisonManifestEntry>& entries) {
  std::ostringstream out;
  out << "item,strategy,selected,trigger_hash\n";
  for (const PoisonManifestEntry& e : entries) {
    out << e.item_id << ',' << to_string(e.strategy) << ',';
    for (size_t i = 0; i < e.selected.size(); ++i) {
      if (i > 0) out << ' ';
      out << e.selected[i];
    }
    out << ',' << std::hex << e.trigger_hash << std::dec << '\n';
  }
  return out.str();
}

GraphPoisonResult poison_graph_training_set(const GraphDataset& train,
                                            const GnnModel& model_o,
                                            const AttackConfig& config,
                                            const TriggerGraph& trigger,
                                            const ExplainerConfig& explainer) {
  validate_attack_config(config, train.class_count);
  if (config.task != TaskKind::GraphClassification) {
    throw ArgumentError("poison_graph_training_set: config is for the node task");
  }
  const int n = train.size();
  if (n == 0) throw DegenerateInputError("poison_graph_training_set: empty training set");
  const int count = round_half_up_positive(config.eta * n);
  if (count == 0) {
    throw PoisoningFailedError("poisoning fraction " + std::to_string(config.eta) +
                               " selects zero of " + std::to_string(n) + " training graphs");
  }

  Rng pick_rng = make_rng(derive_seed(config.seed, kPickTag));
  std::vector<int> picks = sample_without_replacement(n, std::min(count, n), pick_rng);

  GraphPoisonResult result;
  result.dataset = train;
  const std::uint64_t hash = trigger_hash(trigger);
  for (int id : picks) {
    const Graph& g = train.graphs[id];
    if (trigger.node_count > g.node_count) {
      result.skipped_ids.push_back(id);
      continue;
    }
    std::optional<ImportanceScores> importance;
    if (config.strategy != SelectionStrategy::Rsa) {
      auto start = std::chrono::steady_clock::now();
      ExplainerConfig per_item = explainer;
      per_item.seed = derive_seed(config.seed, kExplainTag, static_cast<std::uint64_t>(id));
      EdgeMask mask = explain_graph(model_o, g, per_item);
      importance = node_importance(mask, g.node_count);
      importance->subject = id;
      result.explain_seconds += seconds_since(start);
    }
    auto selected = select_trigger_nodes(
        g, importance ? &*importance : nullptr, trigger.node_count, config.strategy,
        derive_seed(config.seed, kSelectTag, static_cast<std::uint64_t>(id)));
    if (!selected) {
      result.skipped_ids.push_back(id);
      continue;
    }
    Graph poisoned = inject_graph_trigger(g, *selected, trigger);
    poisoned.graph_label = config.target_class;
    result.dataset.graphs[id] = std::move(poisoned);
    result.poisoned_ids.push_back(id);
    result.manifest.push_back({id, config.strategy, *selected, hash});
  }
  if (result.poisoned_ids.empty()) {
    throw PoisoningFailedError("every selected training graph was smaller than the " +
                               std::to_string(trigger.node_count) + "-node trigger");
  }
  std::sort(result.poisoned_ids.begin(), result.poisoned_ids.end());
  std::sort(result.skipped_ids.begin(), result.skipped_ids.end());
  return result;
}

BackdooredTestSet build_backdoored_test_set(const GraphDataset& test,
                                            const GnnModel& model_o,
                                            const AttackConfig& config,
                                            const TriggerGraph& trigger,
                                            const ExplainerConfig& explainer) {
  validate_attack_config(config, test.class_count);
  if (config.task != TaskKind::GraphClassification) {
    throw ArgumentError("build_backdoored_test_set: config is for the node task");
  }
  BackdooredTestSet result;
  result.dataset.name = test.name;
  result.dataset.class_count = test.class_count;
  const std::uint64_t hash = trigger_hash(trigger);
  for (int id = 0; id < test.size(); ++id) {
    const Graph& g = test.graphs[id];
    if (!g.graph_label) throw ArgumentError("build_backdoored_test_set: unlabeled graph");
    if (*g.graph_label == config.target_class) continue;
    if (trigger.node_count > g.node_count) {
      result.skipped_ids.push_back(id);
      continue;
    }
    std::optional<ImportanceScores> importance;
    if (config.strategy != SelectionStrategy::Rsa) {
      auto start = std::chrono::steady_clock::now();
      ExplainerConfig per_item = explainer;
      per_item.seed = derive_seed(config.seed, kTestTag ^ kExplainTag,
                                  static_cast<std::uint64_t>(id));
      EdgeMask mask = explain_graph(model_o, g, per_item);
      importance = node_importance(mask, g.node_count);
      importance->subject = id;
      result.explain_seconds += seconds_since(start);
    }
    auto selected = select_trigger_nodes(
        g, importance ? &*importance : nullptr, trigger.node_count, config.strategy,
        derive_seed(config.seed, kTestTag ^ kSelectTag, static_cast<std::uint64_t>(id)));
    if (!selected) {
      result.skipped_ids.push_back(id);
      continue;
    }
    // The stored label stays the true one; success is "predicted as target".
    result.dataset.graphs.push_back(inject_graph_trigger(g, *selected, trigger));
    result.source_ids.push_back(id);
    result.manifest.push_back({id, config.strategy, *selected, hash});
  }
  if (result.dataset.graphs.empty()) {
    throw EvaluationImpossibleError(
        "no evaluable test graphs: every non-target graph was missing or smaller "
        "than the trigger");
  }
  return result;
}

NodePoisonResult poison_node_training_set(const NodeTaskDataset& dataset,
                                          const GnnModel& model_o,
                                          const AttackConfig& config,
                                          const ExplainerConfig& explainer) {
  validate_attack_config(config, dataset.class_count);
  if (config.task != TaskKind::NodeClassification) {
    throw ArgumentError("poison_node_training_set: config is for the graph task");
  }
  const std::vector<int> train_nodes = dataset.train_nodes();
  if (train_nodes.empty()) {
    throw DegenerateInputError("poison_node_training_set: empty train mask");
  }
  const int count = round_half_up_positive(config.poison_fraction *
                                           static_cast<double>(train_nodes.size()));
  if (count == 0) {
    throw PoisoningFailedError("poisoning fraction " + std::to_string(config.poison_fraction) +
                               " selects zero of " + std::to_string(train_nodes.size()) +
                               " training nodes");
  }
  const int d = dataset.graph.feature_dim();
  const int n_feat = feature_trigger_size(d, config.feature_fraction);

  NodePoisonResult result;
  result.dataset = dataset;
  result.shared_trigger = build_feature_trigger(
      select_trigger_features(nullptr, n_feat, SelectionStrategy::Rsa,
                              derive_seed(config.seed, kFeatTag), d),
      config.fill_value, d);

  Rng pick_rng = make_rng(derive_seed(config.seed, kPickTag));
  std::vector<int> picks = sample_without_replacement(
      static_cast<int>(train_nodes.size()), std::min<int>(count, train_nodes.size()), pick_rng);

  std::vector<int> predicted;
  if (config.strategy != SelectionStrategy::Rsa) {
    auto start = std::chrono::steady_clock::now();
    predicted = predicted_node_labels(model_o, dataset.graph);
    result.explain_seconds += seconds_since(start);
  }

  for (int pick : picks) {
    const int v = train_nodes[pick];
    FeatureTrigger node_trigger = result.shared_trigger;
    if (config.strategy != SelectionStrategy::Rsa) {
      auto start = std::chrono::steady_clock::now();
      try {
        ExplainerConfig per_node = explainer;
        per_node.seed = derive_seed(config.seed, kExplainTag, static_cast<std::uint64_t>(v));
        ImportanceScores importance =
            explain_node_features(model_o, dataset, v, per_node, predicted);
        node_trigger = build_feature_trigger(
            select_trigger_features(&importance, n_feat, config.strategy,
                                    derive_seed(config.seed, kSelectTag,
                                                static_cast<std::uint64_t>(v)),
                                    d),
            config.fill_value, d);
      } catch (const InsufficientSamplesError&) {
        ++result.fallback_count;  // shared random trigger stands in
      }
      result.explain_seconds += seconds_since(start);
    }
    result.dataset.graph.node_features.row(v) =
        inject_feature_trigger(dataset.graph.node_features.row(v), node_trigger);
    result.dataset.graph.node_labels[v] = config.target_class;
    result.poisoned_nodes.push_back(v);
    result.node_triggers.push_back(node_trigger);
    result.manifest.push_back(
        {v, config.strategy, node_trigger.indices, trigger_hash(node_trigger)});
  }
  // Keep everything in ascending node order for stable reports.
  std::vector<size_t> order(result.poisoned_nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return result.poisoned_nodes[a] < result.poisoned_nodes[b];
  });
  NodePoisonResult sorted;
  sorted.dataset = std::move(result.dataset);
  sorted.shared_trigger = std::move(result.shared_trigger);
  sorted.fallback_count = result.fallback_count;
  sorted.explain_seconds = result.explain_seconds;
  for (size_t i : order) {
    sorted.poisoned_nodes.push_back(result.poisoned_nodes[i]);
    sorted.node_triggers.push_back(std::move(result.node_triggers[i]));
    sorted.manifest.push_back(std::move(result.manifest[i]));
  }
  return sorted;
}

NodeEvalTrigger build_node_eval_trigger(const NodeTaskDataset& clean_data,
                                        const GnnModel& model_o,
                                        const AttackConfig& config,
                                        const FeatureTrigger& shared_trigger, int node,
                                        const ExplainerConfig& explainer,
                                        const std::vector<int>& predicted_labels) {
  if (config.task != TaskKind::NodeClassification) {
    throw ArgumentError("build_node_eval_trigger: config is for the graph task");
  }
  NodeEvalTrigger result;
  result.trigger = shared_trigger;
  if (config.strategy == SelectionStrategy::Rsa) return result;

  const int d = clean_data.graph.feature_dim();
  const int n_feat = feature_trigger_size(d, config.feature_fraction);
  auto start = std::chrono::steady_clock::now();
  try {
    ExplainerConfig per_node = explainer;
    per_node.seed = derive_seed(config.seed, kTestTag ^ kExplainTag,
                                static_cast<std::uint64_t>(node));
    ImportanceScores importance =
        explain_node_features(model_o, clean_data, node, per_node, predicted_labels);
    result.trigger = build_feature_trigger(
        select_trigger_features(&importance, n_feat, config.strategy,
                                derive_seed(config.seed, kTestTag ^ kSelectTag,
                                            static_cast<std::uint64_t>(node)),
                                d),
        config.fill_value, d);
  } catch (const InsufficientSamplesError&) {
    result.fallback = true;
  }
  result.explain_seconds = seconds_since(start);
  return result;
}

}  // namespace graphbd
