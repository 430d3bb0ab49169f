#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "graphbd/autodiff.hpp"
#include "graphbd/graph.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {

enum class Architecture { Gin, GraphSage, Gat };
enum class Readout { Sum, Mean };
enum class TaskKind { GraphClassification, NodeClassification };

std::string to_string(Architecture a);
std::string to_string(Readout r);
std::string to_string(TaskKind t);
Architecture architecture_from_string(const std::string& name);
Readout readout_from_string(const std::string& name);
TaskKind task_from_string(const std::string& name);

struct ModelConfig {
  Architecture architecture = Architecture::Gin;
  int layer_count = 3;
  int hidden_dim = 64;
  int attention_heads = 8;  // GAT only
  Readout readout = Readout::Sum;
  double learning_rate = 0.01;
  int epochs = 200;
  double dropout = 0.0;
  double weight_decay = 0.0;
  int batch_size = 32;  // whole graphs per step; node task always trains full-graph
  std::uint64_t seed = 0;
};

// Standard settings for each architecture; the caller may override any field.
ModelConfig default_graph_config(Architecture arch);
ModelConfig default_node_config(Architecture arch);
void validate_config(const ModelConfig& config);

// One or more graphs packed into a single node set with directed arcs
// (each undirected edge appears in both directions). Built once, reused
// across forward passes.
struct PackedGraphs {
  Eigen::MatrixXd dense_x;                            // node features when dense
  std::shared_ptr<const ad::SparseMatrix> sparse_x;   // set instead when very sparse
  std::vector<int> src, dst;                          // directed arcs
  std::vector<int> arc_edge;      // undirected edge index per arc (concatenated order)
  std::vector<int> node_segment;  // owning graph per node
  std::vector<int> graph_labels;  // label per packed graph (graph task; may be empty)
  int node_count = 0;
  int graph_count = 0;
  int feature_dim = 0;
  int undirected_edge_count = 0;

  bool sparse() const { return sparse_x != nullptr; }
};

PackedGraphs pack_graphs(const GraphDataset& data, const std::vector<int>& indices);
PackedGraphs pack_single(const Graph& graph);

struct ForwardOptions {
  // Per-undirected-edge weight column (undirected_edge_count x 1), applied to
  // both directions of each edge. Used by the mask explainer.
  const ad::Var* edge_weights = nullptr;
  // Non-null enables dropout (training mode); masks are drawn from this.
  Rng* dropout_rng = nullptr;
};

// Message-passing classifier: layer_count rounds of neighborhood aggregation
// followed by a linear head (after readout for the graph task).
class GnnModel {
 public:
  GnnModel(ModelConfig config, TaskKind task, int feature_dim, int class_count);

  const ModelConfig& config() const { return config_; }
  TaskKind task() const { return task_; }
  int feature_dim() const { return feature_dim_; }
  int class_count() const { return class_count_; }

  const std::vector<Eigen::MatrixXd>& parameters() const { return params_; }
  const std::vector<std::string>& parameter_names() const { return param_names_; }
  // Replaces all parameters; shapes must match the current ones.
  void set_parameters(std::vector<Eigen::MatrixXd> values);

  // Registers every parameter on the tape, in parameter_names() order.
  std::vector<ad::Var> bind_parameters(ad::Tape& tape, bool requires_grad) const;
  // Full forward pass to logits: graph task yields graph_count x class_count,
  // node task yields node_count x class_count.
  ad::Var logits(ad::Tape& tape, const std::vector<ad::Var>& params,
                 const PackedGraphs& packed, const ForwardOptions& options) const;

  // Inference (no dropout); rows are softmax distributions.
  Eigen::MatrixXd predict_graphs(const GraphDataset& data,
                                 const std::vector<int>& indices) const;
  Eigen::VectorXd predict_graph(const Graph& graph) const;
  Eigen::MatrixXd predict_nodes(const Graph& graph) const;
  int predicted_graph_label(const Graph& graph) const;

  double accuracy(const GraphDataset& data, const std::vector<int>& indices) const;
  double accuracy(const NodeTaskDataset& data, const std::vector<char>& mask) const;

 private:
  ModelConfig config_;
  TaskKind task_;
  int feature_dim_;
  int class_count_;
  std::vector<Eigen::MatrixXd> params_;
  std::vector<std::string> param_names_;

  int gat_head_dim() const;
  int embedding_dim() const;  // width entering the classifier head
  void init_parameters();
};

// One aggregation round of the model's architecture on explicit inputs;
// z_prev must have the width layer `layer` consumes.
Eigen::MatrixXd aggregate_layer(const GnnModel& model, const Graph& graph, int layer,
                                const Eigen::MatrixXd& z_prev);

// Per-node mean of neighbor feature rows; isolated nodes get zero rows.
Eigen::MatrixXd neighbor_mean(const Graph& graph, const Eigen::MatrixXd& features);

Eigen::RowVectorXd readout(const Eigen::MatrixXd& z, Readout mode);

// Exact class distribution for one node, optionally with some nodes' feature
// rows replaced. Computed on the node's layer_count-hop ball, which contains
// every input that can influence the prediction.
Eigen::VectorXd predict_node_exact(
    const GnnModel& model, const Graph& graph, int node,
    const std::vector<std::pair<int, Eigen::RowVectorXd>>& feature_overrides = {});

}  // namespace graphbd
