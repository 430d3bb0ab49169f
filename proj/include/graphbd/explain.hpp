#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace graphbd {

enum class ImportanceKind { NodeImportance, FeatureImportance };

// Raw importance scores for one subject (a graph's nodes, or a node's
// features). Ties and selection happen downstream.
struct ImportanceScores {
  ImportanceKind kind = ImportanceKind::NodeImportance;
  Eigen::VectorXd scores;
  int subject = -1;  // graph index or node index, when known
};

struct ExplainerConfig {
  // Edge-mask optimization.
  int iterations = 100;
  double step_size = 0.01;
  double mask_size_weight = 0.005;
  double mask_entropy_weight = 1.0;
  // Feature explanation over the N-hop neighborhood.
  int hop_count = 2;
  int top_features = 1;
  std::string kernel_bandwidth_rule = "median";
  double hsic_lambda = 1e-4;  // non-negative lasso regularization weight
  int max_samples = 64;       // neighborhood cap; larger ones are subsampled
  std::uint64_t seed = 0;
};

void validate_explainer_config(const ExplainerConfig& config);

// Columnar audit dump: one "subject,index,score" line per entry.
void write_importance_csv(std::ostream& out, const std::vector<ImportanceScores>& scores);

}  // namespace graphbd
