#include "graphbd/explain_hsic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {

namespace {

constexpr std::uint64_t kSampleTag = 0x534d504c;
constexpr int kMaxSweeps = 200;
constexpr double kSweepTol = 1e-10;

// Centers a symmetric kernel in place (K <- HKH) and returns its Frobenius
// norm after centering.
double center_kernel(Eigen::MatrixXd& k) {
  const Eigen::VectorXd row_means = k.rowwise().mean();
  const double total = row_means.mean();
  k.colwise() -= row_means;
  k.rowwise() -= row_means.transpose();
  k.array() += total;
  return k.norm();
}

// Gaussian kernel of one feature column under the median heuristic. Returns
// false when the column has zero variance (no nonzero pairwise difference).
bool feature_kernel(const Eigen::VectorXd& col, Eigen::MatrixXd& k) {
  const Eigen::Index m = col.size();
  const double lo = col.minCoeff(), hi = col.maxCoeff();
  if (lo == hi) return false;

  // Two-valued columns (one-hot and bag-of-words data) need no per-pair exp:
  // every nonzero difference equals hi - lo, the median bandwidth is that
  // difference, and the kernel takes only the values 1 and exp(-1/2).
  bool two_valued = true;
  for (Eigen::Index i = 0; i < m && two_valued; ++i) {
    two_valued = col(i) == lo || col(i) == hi;
  }
  if (two_valued) {
    const double off = std::exp(-0.5);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        k(i, j) = col(i) == col(j) ? 1.0 : off;
      }
    }
    return true;
  }

  std::vector<double> diffs;
  diffs.reserve(static_cast<size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = std::abs(col(i) - col(j));
      if (d > 0.0) diffs.push_back(d);
    }
  }
  const size_t mid = diffs.size() / 2;
  std::nth_element(diffs.begin(), diffs.begin() + mid, diffs.end());
  const double sigma = diffs[mid];
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index i = 0; i < m; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const double d = col(i) - col(j);
      k(i, j) = k(j, i) = std::exp(-d * d * inv);
    }
  }
  return true;
}

}  // namespace

Eigen::VectorXd hsic_lasso(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                           double lambda) {
  const Eigen::Index m = x.rows(), d = x.cols();
  if (m < 2) throw InsufficientSamplesError("hsic_lasso: need at least 2 samples");
  if (static_cast<Eigen::Index>(labels.size()) != m) {
    throw ShapeError("hsic_lasso: one label per sample row required");
  }
  if (lambda < 0.0) throw ArgumentError("hsic_lasso: lambda must be non-negative");

  // Flattened, centered, unit-norm kernels of the non-degenerate features.
  Eigen::MatrixXd v(m * m, d);
  std::vector<Eigen::Index> kept;
  kept.reserve(d);
  Eigen::MatrixXd kernel(m, m);
  for (Eigen::Index f = 0; f < d; ++f) {
    if (!feature_kernel(x.col(f), kernel)) continue;
    const double norm = center_kernel(kernel);
    if (norm <= 0.0) continue;
    v.col(static_cast<Eigen::Index>(kept.size())) =
        Eigen::Map<const Eigen::VectorXd>(kernel.data(), m * m) / norm;
    kept.push_back(f);
  }
  const auto d_eff = static_cast<Eigen::Index>(kept.size());

  Eigen::MatrixXd label_kernel(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      label_kernel(i, j) = labels[i] == labels[j] ? 1.0 : 0.0;
    }
  }
  const double lnorm = center_kernel(label_kernel);
  Eigen::VectorXd residual = Eigen::VectorXd::Zero(m * m);
  if (lnorm > 0.0) {
    residual = Eigen::Map<const Eigen::VectorXd>(label_kernel.data(), m * m) / lnorm;
  }

  // Coordinate descent; columns have unit norm, so each coordinate step is
  // the exact one-dimensional minimizer clipped at zero.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(d_eff);
  for (int sweep = 0; sweep < kMaxSweeps && d_eff > 0; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index k = 0; k < d_eff; ++k) {
      const double updated = std::max(0.0, alpha(k) + v.col(k).dot(residual) - lambda);
      const double delta = updated - alpha(k);
      if (delta != 0.0) {
        residual -= delta * v.col(k);
        alpha(k) = updated;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    if (max_change < kSweepTol) break;
  }

  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (Eigen::Index k = 0; k < d_eff; ++k) out(kept[k]) = alpha(k);
  return out;
}

std::vector<int> predicted_node_labels(const GnnModel& model, const Graph& graph) {
  Eigen::MatrixXd probs = model.predict_nodes(graph);
  std::vector<int> labels(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    labels[i] = static_cast<int>(best);
  }
  return labels;
}

ImportanceScores explain_node_features(const GnnModel& model, const NodeTaskDataset& data,
                                       int node, const ExplainerConfig& config,
                                       const std::vector<int>& predicted_labels) {
  validate_explainer_config(config);
  const Graph& g = data.graph;
  if (model.task() != TaskKind::NodeClassification) {
    throw ArgumentError("explain_node_features: model was built for the graph task");
  }
  if (static_cast<int>(predicted_labels.size()) != g.node_count) {
    throw ShapeError("explain_node_features: one predicted label per node required");
  }
  std::vector<int> samples = k_hop_neighborhood(g, node, config.hop_count);
  if (static_cast<int>(samples.size()) < 2) {
    throw InsufficientSamplesError("explain_node_features: neighborhood of node " +
                                   std::to_string(node) + " has fewer than 2 nodes");
  }
  if (static_cast<int>(samples.size()) > config.max_samples) {
    std::vector<int> others;
    others.reserve(samples.size() - 1);
    for (int s : samples) {
      if (s != node) others.push_back(s);
    }
    Rng rng = make_rng(derive_seed(config.seed, kSampleTag, static_cast<std::uint64_t>(node)));
    std::vector<int> picks =
        sample_without_replacement(static_cast<int>(others.size()), config.max_samples - 1, rng);
    std::vector<int> reduced;
    reduced.reserve(config.max_samples);
    reduced.push_back(node);
    for (int p : picks) reduced.push_back(others[p]);
    std::sort(reduced.begin(), reduced.end());
    samples = std::move(reduced);
  }

  Eigen::MatrixXd x(samples.size(), g.feature_dim());
  std::vector<int> y(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = g.node_features.row(samples[i]);
    y[i] = predicted_labels[samples[i]];
  }

  ImportanceScores out;
  out.kind = ImportanceKind::FeatureImportance;
  out.subject = node;
  out.scores = hsic_lasso(x, y, config.hsic_lambda);
  return out;
}

ImportanceScores explain_node_features(const GnnModel& model, const NodeTaskDataset& data,
                                       int node, const ExplainerConfig& config) {
  return explain_node_features(model, data, node, config,
                               predicted_node_labels(model, data.graph));
}

}  // namespace graphbd
