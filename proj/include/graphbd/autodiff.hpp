#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <vector>

namespace graphbd::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape over dense matrices. One tape per forward/backward pass;
// build the graph, call backward(loss), read gradients off the leaves.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix v);
  Var leaf(Matrix v);  // differentiable input (parameter, mask logits)

  Var matmul(Var a, Var b);
  // lhs is constant and possibly sparse; gradient flows into b only.
  Var sparse_matmul(std::shared_ptr<const SparseMatrix> a, Var b);
  Var linear(Var x, Var w, Var bias);  // x*w + bias broadcast over rows
  Var add(Var a, Var b);
  Var add_row_broadcast(Var a, Var row);  // row (1 x c) added to every row of a
  Var sub(Var a, Var b);
  Var cmul(Var a, Var b);
  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var elu(Var a);
  Var sigmoid(Var a);
  Var log(Var a);
  // mask entries are 0 or 1/(1-p); caller draws the mask.
  Var dropout(Var a, const Matrix& mask);
  Var gather_rows(Var a, std::vector<int> idx);
  Var segment_sum(Var a, std::vector<int> seg, int segment_count);
  // empty segments yield zero rows
  Var segment_mean(Var a, std::vector<int> seg, int segment_count);
  // softmax of an n x 1 score vector within each segment
  Var segment_softmax(Var scores, std::vector<int> seg, int segment_count);
  Var mul_col_broadcast(Var a, Var w);          // row i scaled by w(i,0)
  Var div_col_broadcast(Var a, Var d, double eps);  // row i divided by d(i,0)+eps
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var sum_all(Var a);   // 1x1
  Var mean_all(Var a);  // 1x1
  // Weighted mean cross-entropy over rows: sum_i w_i * nll_i / sum_i w_i.
  Var softmax_cross_entropy(Var logits, std::vector<int> labels,
                            std::vector<double> row_weights);

  void backward(Var loss);
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  friend class Var;
  struct Node {
    Matrix val;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&, int)> back;  // (tape, own id)
  };
  std::vector<Node> nodes_;

  Var push(Matrix val, bool requires_grad, std::function<void(Tape&, int)> back);
  Node& node(int id) { return nodes_[id]; }
  const Node& node(int id) const { return nodes_[id]; }
  bool needs(Var v) const { return nodes_[v.id_].requires_grad; }
  void accumulate(int id, const Matrix& g);
};

}  // namespace graphbd::ad
