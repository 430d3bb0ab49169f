#pragma once

#include <Eigen/Dense>
#include <vector>

#include "graphbd/explain.hpp"
#include "graphbd/graph.hpp"
#include "graphbd/model.hpp"

namespace graphbd {

// Non-negative kernelized lasso over explicit samples: one Gaussian kernel
// per feature column (median-heuristic bandwidth over nonzero pairwise
// differences), a Delta kernel on the labels, all kernels centered and
// Frobenius-normalized, solved by coordinate descent under alpha >= 0 with L1
// weight lambda. Zero-variance feature columns get coefficient exactly 0.
Eigen::VectorXd hsic_lasso(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                           double lambda);

// Feature importance of one node: kernel regression of the model's predicted
// labels over the node's hop_count-hop neighborhood samples (subsampled down
// to config.max_samples when larger, keeping the node itself).
ImportanceScores explain_node_features(const GnnModel& model, const NodeTaskDataset& data,
                                       int node, const ExplainerConfig& config);

// Same, with the model's predicted label for every node precomputed by the
// caller (one predict_nodes pass shared across many explanations).
ImportanceScores explain_node_features(const GnnModel& model, const NodeTaskDataset& data,
                                       int node, const ExplainerConfig& config,
                                       const std::vector<int>& predicted_labels);

// Argmax row labels of predict_nodes, the cache explain_node_features wants.
std::vector<int> predicted_node_labels(const GnnModel& model, const Graph& graph);

}  // namespace graphbd
