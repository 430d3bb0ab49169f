#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace graphbd {

// Random-graph trigger: node_count >= 2 nodes, edges over 0..node_count-1,
// no self-loops, generated with independent per-pair probability `density`.
struct TriggerGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // u < v, sorted ascending
  double density = 0.0;
  std::uint64_t seed = 0;

  int edge_count() const { return static_cast<int>(edges.size()); }
};

// Feature trigger: the listed feature dimensions are overwritten with
// fill_value wherever the trigger is injected.
struct FeatureTrigger {
  std::vector<int> indices;  // strictly increasing
  double fill_value = 1.0;

  int size() const { return static_cast<int>(indices.size()); }
};

// t = max(2, round(gamma * avg_nodes)), half-up rounding.
int trigger_size_from_gamma(double avg_nodes, double gamma);

// Gilbert G(t, rho): each of the C(t,2) pairs included independently with
// probability rho, in lexicographic pair order. Bitwise reproducible per seed.
TriggerGraph generate_er_trigger(int t, double rho, std::uint64_t seed);

// n = max(1, round(fraction * feature_dim)), half-up rounding.
int feature_trigger_size(int feature_dim, double fraction);

// Sorts the indices and validates them (distinct, non-negative, and below
// feature_dim when feature_dim >= 0 is given).
FeatureTrigger build_feature_trigger(std::vector<int> indices, double fill_value = 1.0,
                                     int feature_dim = -1);

// Small audit blocks embedded in experiment reports.
std::string trigger_to_text(const TriggerGraph& trigger);
std::string trigger_to_text(const FeatureTrigger& trigger);

// FNV-1a over the trigger's structure, for poisoning manifests.
std::uint64_t trigger_hash(const TriggerGraph& trigger);
std::uint64_t trigger_hash(const FeatureTrigger& trigger);

}  // namespace graphbd
