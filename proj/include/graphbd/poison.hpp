#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphbd/explain.hpp"
#include "graphbd/graph.hpp"
#include "graphbd/model.hpp"
#include "graphbd/trigger.hpp"

namespace graphbd {

enum class SelectionStrategy { Rsa, Mia, Lia };

std::string to_string(SelectionStrategy s);
SelectionStrategy strategy_from_string(const std::string& name);

struct AttackConfig {
  TaskKind task = TaskKind::GraphClassification;
  SelectionStrategy strategy = SelectionStrategy::Rsa;
  int target_class = 0;
  double gamma = 0.2;  // trigger node count as a fraction of average graph size
  double rho = 0.8;    // trigger edge density
  double eta = 0.05;   // fraction of training graphs poisoned
  double poison_fraction = 0.15;   // fraction of training nodes poisoned
  double feature_fraction = 0.1;   // fraction of feature dims in the trigger
  double fill_value = 1.0;
  std::uint64_t seed = 0;
};

void validate_attack_config(const AttackConfig& config, int class_count);

// Picks the t trigger positions in one graph. RSA samples uniformly without
// replacement; MIA takes the t largest scores, LIA the t smallest, ties
// broken toward the lower node index. Output ascending. Returns nullopt when
// the graph has fewer than t nodes (skip signal).
std::optional<std::vector<int>> select_trigger_nodes(const Graph& graph,
                                                     const ImportanceScores* importance,
                                                     int t, SelectionStrategy strategy,
                                                     std::uint64_t seed);

// Replaces the subgraph induced on `nodes`: every edge among them is removed,
// then trigger edge (i,j) becomes an edge between the i-th and j-th selected
// nodes in ascending order. Everything else is untouched. Idempotent.
Graph inject_graph_trigger(const Graph& graph, const std::vector<int>& nodes,
                           const TriggerGraph& trigger);

// Analogous selection over feature dimensions.
std::vector<int> select_trigger_features(const ImportanceScores* importance, int n,
                                         SelectionStrategy strategy, std::uint64_t seed,
                                         int feature_dim);

// out[i] = fill_value at trigger indices, features[i] elsewhere. Idempotent.
Eigen::RowVectorXd inject_feature_trigger(const Eigen::RowVectorXd& features,
                                          const FeatureTrigger& trigger);

struct PoisonManifestEntry {
  int item_id = -1;  // graph index or node index
  SelectionStrategy strategy = SelectionStrategy::Rsa;
  std::vector<int> selected;  // trigger positions (nodes or feature dims)
  std::uint64_t trigger_hash = 0;
};

std::string manifest_to_text(const std::vector<PoisonManifestEntry>& entries);

struct GraphPoisonResult {
  GraphDataset dataset;           // poisoned copy of the training set
  std::vector<int> poisoned_ids;  // ascending indices into the training set
  std::vector<int> skipped_ids;   // picked but smaller than the trigger
  std::vector<PoisonManifestEntry> manifest;
  double explain_seconds = 0.0;
};

// Poisons round(eta * |train|) uniformly-chosen training graphs: trigger
// positions per strategy (importance from model_o), trigger injected, label
// set to the target class. Throws when the poison count is zero or every
// pick had to be skipped.
GraphPoisonResult poison_graph_training_set(const GraphDataset& train,
                                            const GnnModel& model_o,
                                            const AttackConfig& config,
                                            const TriggerGraph& trigger,
                                            const ExplainerConfig& explainer = {});

struct BackdooredTestSet {
  GraphDataset dataset;          // trigger-injected non-target graphs
  std::vector<int> source_ids;   // index into the clean test set per graph
  std::vector<int> skipped_ids;  // non-target but smaller than the trigger
  std::vector<PoisonManifestEntry> manifest;
  double explain_seconds = 0.0;
};

// Injects the trigger into every non-target-label test graph, keeping the
// original labels for success-rate bookkeeping. Importance comes from the
// clean model. Throws when nothing is left to evaluate.
BackdooredTestSet build_backdoored_test_set(const GraphDataset& test,
                                            const GnnModel& model_o,
                                            const AttackConfig& config,
                                            const TriggerGraph& trigger,
                                            const ExplainerConfig& explainer = {});

struct NodePoisonResult {
  NodeTaskDataset dataset;          // features and labels of poisoned nodes changed
  std::vector<int> poisoned_nodes;  // ascending node indices
  FeatureTrigger shared_trigger;    // the random trigger (RSA choice / fallback)
  std::vector<FeatureTrigger> node_triggers;  // per poisoned node, same order
  std::vector<PoisonManifestEntry> manifest;
  int fallback_count = 0;  // nodes whose explanation had too few samples
  double explain_seconds = 0.0;
};

// Poisons round(poison_fraction * |train nodes|) uniformly-chosen training
// nodes: per-node feature triggers for MIA/LIA (explanation-driven), one
// shared random trigger for RSA; trigger dims set to fill_value, labels set
// to the target class. Explanations with fewer than 2 samples fall back to
// the shared random trigger and are counted.
NodePoisonResult poison_node_training_set(const NodeTaskDataset& dataset,
                                          const GnnModel& model_o,
                                          const AttackConfig& config,
                                          const ExplainerConfig& explainer = {});

struct NodeEvalTrigger {
  FeatureTrigger trigger;
  bool fallback = false;        // explanation failed, shared trigger used
  double explain_seconds = 0.0;
};

// Test-time trigger for one evaluation node, on independent seed streams from
// the training-time ones. RSA reuses the shared trigger outright; MIA/LIA
// re-run the strategy against the clean model on the clean data (predicted
// labels precomputed by the caller), falling back to the shared trigger when
// the node's neighborhood is too small to explain.
NodeEvalTrigger build_node_eval_trigger(const NodeTaskDataset& clean_data,
                                        const GnnModel& model_o,
                                        const AttackConfig& config,
                                        const FeatureTrigger& shared_trigger, int node,
                                        const ExplainerConfig& explainer,
                                        const std::vector<int>& predicted_labels);

}  // namespace graphbd
