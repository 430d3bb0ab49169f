#pragma once

#include <Eigen/Dense>

#include "graphbd/explain.hpp"
#include "graphbd/graph.hpp"
#include "graphbd/model.hpp"

namespace graphbd {

// Soft edge mask aligned with a graph's canonical edge list; every value is
// in [0,1].
struct EdgeMask {
  std::vector<std::pair<int, int>> edges;
  Eigen::VectorXd values;

  double value(int u, int v) const;  // throws if (u,v) is not a masked edge
};

// Learns a per-edge mask that keeps the model's own prediction while shrinking
// toward a small, near-binary edge set: minimizes cross-entropy of the
// mask-weighted graph's prediction against the model's predicted label, plus a
// size term (sum of mask values) and a binary-entropy term. Returns the
// best-objective iterate, so its objective never exceeds the initial one.
EdgeMask explain_graph(const GnnModel& model, const Graph& graph,
                       const ExplainerConfig& config);

// score(v) = sum of mask values on edges incident to v, divided by the
// maximum such sum; all-zero masks are returned unnormalized.
ImportanceScores node_importance(const EdgeMask& mask, int node_count);

}  // namespace graphbd
