#include "graphbd/explain_mask.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "graphbd/autodiff.hpp"
#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"
#include "graphbd/train.hpp"

namespace graphbd {

namespace {

constexpr std::uint64_t kMaskInitTag = 0x4d41534b;
constexpr double kEntropyEps = 1e-12;

}  // namespace

void validate_explainer_config(const ExplainerConfig& c) {
  if (c.iterations < 0) throw ArgumentError("iterations must be non-negative");
  if (!(c.step_size > 0.0)) throw ArgumentError("step_size must be positive");
  if (c.mask_size_weight < 0.0) throw ArgumentError("mask_size_weight must be non-negative");
  if (c.mask_entropy_weight < 0.0) throw ArgumentError("mask_entropy_weight must be non-negative");
  if (c.hop_count < 1) throw ArgumentError("hop_count must be at least 1");
  if (c.top_features < 1) throw ArgumentError("top_features must be at least 1");
  if (c.kernel_bandwidth_rule != "median") {
    throw ArgumentError("unknown kernel_bandwidth_rule '" + c.kernel_bandwidth_rule + "'");
  }
  if (c.hsic_lambda < 0.0) throw ArgumentError("hsic_lambda must be non-negative");
  if (c.max_samples < 2) throw ArgumentError("max_samples must be at least 2");
}

void write_importance_csv(std::ostream& out, const std::vector<ImportanceScores>& scores) {
  out << "subject,index,score\n";
  for (const ImportanceScores& s : scores) {
    for (Eigen::Index i = 0; i < s.scores.size(); ++i) {
      out << s.subject << ',' << i << ',' << s.scores(i) << '\n';
    }
  }
}

double EdgeMask::value(int u, int v) const {
  if (u > v) std::swap(u, v);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(u, v));
  if (it == edges.end() || *it != std::make_pair(u, v)) {
    throw ArgumentError("EdgeMask::value: no such edge");
  }
  return values(it - edges.begin());
}

EdgeMask explain_graph(const GnnModel& model, const Graph& graph,
                       const ExplainerConfig& config) {
  validate_explainer_config(config);
  validate_graph(graph);
  const int e = graph.edge_count();
  EdgeMask mask;
  mask.edges = graph.edges;
  if (e == 0) {
    mask.values.resize(0);
    return mask;
  }

  const int label = model.predicted_graph_label(graph);
  PackedGraphs packed = pack_single(graph);

  Rng rng = make_rng(derive_seed(config.seed, kMaskInitTag));
  std::normal_distribution<double> init(0.0, 0.1);
  Eigen::MatrixXd logits_param(e, 1);
  for (int i = 0; i < e; ++i) logits_param(i, 0) = init(rng);

  std::vector<Eigen::MatrixXd> opt_state{logits_param};
  Adam optimizer(config.step_size);
  double best_objective = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_values =
      (1.0 / (1.0 + (-logits_param.col(0).array()).exp())).matrix();

  for (int it = 0; it <= config.iterations; ++it) {
    ad::Tape tape;
    ad::Var m = tape.leaf(opt_state[0]);
    ad::Var w = tape.sigmoid(m);
    auto params = model.bind_parameters(tape, false);
    ForwardOptions opts;
    opts.edge_weights = &w;
    ad::Var lg = model.logits(tape, params, packed, opts);
    ad::Var ce = tape.softmax_cross_entropy(lg, {label}, {1.0});
    // Binary entropy of each mask value, pushing the mask toward 0/1.
    ad::Var ones = tape.constant(Eigen::MatrixXd::Ones(e, 1));
    ad::Var entropy = tape.scale(
        tape.add(tape.cmul(w, tape.log(tape.add_scalar(w, kEntropyEps))),
                 tape.cmul(tape.sub(ones, w),
                           tape.log(tape.add_scalar(tape.sub(ones, w), kEntropyEps)))),
        -1.0);
    ad::Var objective =
        tape.add(ce, tape.add(tape.scale(tape.sum_all(w), config.mask_size_weight),
                              tape.scale(tape.mean_all(entropy), config.mask_entropy_weight)));
    const double value = objective.value()(0, 0);
    if (!std::isfinite(value)) {
      throw ExplainerDivergedError("mask objective became non-finite");
    }
    if (value < best_objective) {
      best_objective = value;
      best_values = w.value().col(0);
    }
    if (it == config.iterations) break;
    tape.backward(objective);
    std::vector<Eigen::MatrixXd> grads{m.grad().size() == 0
                                           ? Eigen::MatrixXd::Zero(e, 1)
                                           : m.grad()};
    optimizer.step(opt_state, grads);
  }

  mask.values = best_values;
  return mask;
}

ImportanceScores node_importance(const EdgeMask& mask, int node_count) {
  if (node_count < 0) throw ArgumentError("node_importance: negative node count");
  ImportanceScores out;
  out.kind = ImportanceKind::NodeImportance;
  out.scores = Eigen::VectorXd::Zero(node_count);
  for (size_t i = 0; i < mask.edges.size(); ++i) {
    auto [u, v] = mask.edges[i];
    if (u < 0 || v < 0 || u >= node_count || v >= node_count) {
      throw ArgumentError("node_importance: edge endpoint outside node range");
    }
    const double w = mask.values(static_cast<Eigen::Index>(i));
    if (w < 0.0 || w > 1.0 || !std::isfinite(w)) {
      throw ArgumentError("node_importance: mask value outside [0,1]");
    }
    out.scores(u) += w;
    out.scores(v) += w;
  }
  const double mx = node_count > 0 ? out.scores.maxCoeff() : 0.0;
  if (mx > 0.0) out.scores /= mx;
  return out;
}

}  // namespace graphbd
