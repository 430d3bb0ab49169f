#include "graphbd/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graphbd/autodiff.hpp"
#include "graphbd/error.hpp"
#include "graphbd/rng.hpp"

namespace graphbd {

namespace {

constexpr std::uint64_t kShuffleTag = 0x53485546;  // per-epoch batch order
constexpr std::uint64_t kDropoutTag = 0x44524f50;  // per-epoch dropout masks

std::vector<ad::Var> bind_leaves(ad::Tape& tape, const std::vector<Eigen::MatrixXd>& params) {
  std::vector<ad::Var> vars;
  vars.reserve(params.size());
  for (const auto& p : params) vars.push_back(tape.leaf(p));
  return vars;
}

void collect_grads(const std::vector<ad::Var>& vars,
                   const std::vector<Eigen::MatrixXd>& params, double weight_decay,
                   std::vector<Eigen::MatrixXd>& grads) {
  grads.resize(vars.size());
  for (size_t i = 0; i < vars.size(); ++i) {
    const Eigen::MatrixXd& g = vars[i].grad();
    if (g.size() == 0) {
      grads[i] = Eigen::MatrixXd::Zero(params[i].rows(), params[i].cols());
    } else {
      grads[i] = g;
    }
    if (weight_decay > 0.0) grads[i] += weight_decay * params[i];
  }
}

}  // namespace

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  if (!(learning_rate > 0.0)) throw ArgumentError("Adam: learning rate must be positive");
}

void Adam::step(std::vector<Eigen::MatrixXd>& params,
                const std::vector<Eigen::MatrixXd>& grads) {
  if (params.size() != grads.size()) throw ArgumentError("Adam: params/grads size mismatch");
  if (m_.empty()) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
      m_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
      v_.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
    }
  }
  if (m_.size() != params.size()) throw ArgumentError("Adam: parameter count changed");
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, steps_);
  const double bc2 = 1.0 - std::pow(beta2_, steps_);
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i].cwiseProduct(grads[i]);
    Eigen::ArrayXXd mhat = m_[i].array() / bc1;
    Eigen::ArrayXXd vhat = v_[i].array() / bc2;
    params[i].array() -= lr_ * mhat / (vhat.sqrt() + eps_);
  }
}

TrainResult train(GnnModel& model, const GraphDataset& data) {
  if (model.task() != TaskKind::GraphClassification) {
    throw ArgumentError("train: model was built for the node task");
  }
  if (data.size() == 0) throw DegenerateInputError("train: empty graph dataset");
  for (const Graph& g : data.graphs) {
    if (!g.graph_label) throw ArgumentError("train: graph without a label");
    if (*g.graph_label < 0 || *g.graph_label >= model.class_count()) {
      throw ArgumentError("train: graph label outside the model's class range");
    }
  }
  const ModelConfig& cfg = model.config();
  TrainResult result;
  if (cfg.epochs == 0) return result;

  std::vector<Eigen::MatrixXd> params = model.parameters();
  Adam optimizer(cfg.learning_rate);
  std::vector<Eigen::MatrixXd> grads;
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const int n = data.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(derive_seed(cfg.seed, kShuffleTag, epoch));
    Rng dropout_rng = make_rng(derive_seed(cfg.seed, kDropoutTag, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int len = std::min(cfg.batch_size, n - start);
      std::vector<int> batch(order.begin() + start, order.begin() + start + len);
      PackedGraphs packed = pack_graphs(data, batch);
      ad::Tape tape;
      std::vector<ad::Var> vars = bind_leaves(tape, params);
      ForwardOptions opts;
      opts.dropout_rng = cfg.dropout > 0.0 ? &dropout_rng : nullptr;
      ad::Var lg = model.logits(tape, vars, packed, opts);
      ad::Var loss = tape.softmax_cross_entropy(
          lg, packed.graph_labels, std::vector<double>(len, 1.0));
      const double value = loss.value()(0, 0);
      if (!std::isfinite(value)) {
        throw TrainingDivergedError("training loss became non-finite", epoch);
      }
      epoch_loss += value * len;
      tape.backward(loss);
      collect_grads(vars, params, cfg.weight_decay, grads);
      optimizer.step(params, grads);
    }
    result.loss_history.push_back(epoch_loss / n);
  }
  model.set_parameters(std::move(params));
  return result;
}

TrainResult train(GnnModel& model, const NodeTaskDataset& data) {
  if (model.task() != TaskKind::NodeClassification) {
    throw ArgumentError("train: model was built for the graph task");
  }
  const Graph& g = data.graph;
  if (static_cast<int>(data.train_mask.size()) != g.node_count ||
      static_cast<int>(g.node_labels.size()) != g.node_count) {
    throw ShapeError("train: mask and label lengths must equal node count");
  }
  std::vector<double> weights(g.node_count, 0.0);
  int train_count = 0;
  for (int v = 0; v < g.node_count; ++v) {
    if (data.train_mask[v]) {
      weights[v] = 1.0;
      ++train_count;
    }
    if (g.node_labels[v] < 0 || g.node_labels[v] >= model.class_count()) {
      throw ArgumentError("train: node label outside the model's class range");
    }
  }
  if (train_count == 0) throw DegenerateInputError("train: empty train mask");

  const ModelConfig& cfg = model.config();
  TrainResult result;
  if (cfg.epochs == 0) return result;

  PackedGraphs packed = pack_single(g);
  std::vector<Eigen::MatrixXd> params = model.parameters();
  Adam optimizer(cfg.learning_rate);
  std::vector<Eigen::MatrixXd> grads;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng dropout_rng = make_rng(derive_seed(cfg.seed, kDropoutTag, epoch));
    ad::Tape tape;
    std::vector<ad::Var> vars = bind_leaves(tape, params);
    ForwardOptions opts;
    opts.dropout_rng = cfg.dropout > 0.0 ? &dropout_rng : nullptr;
    ad::Var lg = model.logits(tape, vars, packed, opts);
    ad::Var loss = tape.softmax_cross_entropy(lg, g.node_labels, weights);
    const double value = loss.value()(0, 0);
    if (!std::isfinite(value)) {
      throw TrainingDivergedError("training loss became non-finite", epoch);
    }
    result.loss_history.push_back(value);
    tape.backward(loss);
    collect_grads(vars, params, cfg.weight_decay, grads);
    optimizer.step(params, grads);
  }
  model.set_parameters(std::move(params));
  return result;
}

}  // namespace graphbd
