#include "graphbd/autodiff.hpp"

#include <cmath>

#include "graphbd/error.hpp"

namespace graphbd::ad {

const Matrix& Var::value() const { return tape_->node(id_).val; }
const Matrix& Var::grad() const { return tape_->node(id_).grad; }

Var Tape::push(Matrix val, bool requires_grad,
               std::function<void(Tape&, int)> back) {
  Node n;
  n.val = std::move(val);
  n.requires_grad = requires_grad;
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Tape::constant(Matrix v) { return push(std::move(v), false, nullptr); }

Var Tape::leaf(Matrix v) { return push(std::move(v), true, nullptr); }

Var Tape::matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  int ia = a.id_, ib = b.id_;
  bool rg = needs(a) || needs(b);
  Matrix out = a.value() * b.value();
  return push(std::move(out), rg, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) t.accumulate(ia, g * t.node(ib).val.transpose());
    if (t.node(ib).requires_grad) t.accumulate(ib, t.node(ia).val.transpose() * g);
  });
}

Var Tape::sparse_matmul(std::shared_ptr<const SparseMatrix> a, Var b) {
  if (a->cols() != b.rows()) throw ShapeError("sparse_matmul: inner dimensions differ");
  int ib = b.id_;
  Matrix out = (*a) * b.value();
  return push(std::move(out), needs(b), [a, ib](Tape& t, int self) {
    t.accumulate(ib, a->transpose() * t.node(self).grad);
  });
}

Var Tape::linear(Var x, Var w, Var bias) {
  if (x.cols() != w.rows()) throw ShapeError("linear: x/w dimensions differ");
  if (bias.rows() != 1 || bias.cols() != w.cols()) {
    throw ShapeError("linear: bias must be 1 x out_dim");
  }
  int ix = x.id_, iw = w.id_, ib = bias.id_;
  bool rg = needs(x) || needs(w) || needs(bias);
  Matrix out = x.value() * w.value();
  out.rowwise() += bias.value().row(0);
  return push(std::move(out), rg, [ix, iw, ib](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ix).requires_grad) t.accumulate(ix, g * t.node(iw).val.transpose());
    if (t.node(iw).requires_grad) t.accumulate(iw, t.node(ix).val.transpose() * g);
    if (t.node(ib).requires_grad) t.accumulate(ib, g.colwise().sum());
  });
}

Var Tape::add(Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("add: shape mismatch");
  int ia = a.id_, ib = b.id_;
  return push(a.value() + b.value(), needs(a) || needs(b), [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.node(self).grad);
    t.accumulate(ib, t.node(self).grad);
  });
}

Var Tape::add_row_broadcast(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row_broadcast: row must be 1 x cols(a)");
  }
  int ia = a.id_, ir = row.id_;
  Matrix out = a.value();
  out.rowwise() += Eigen::RowVectorXd(row.value().row(0));
  return push(std::move(out), needs(a) || needs(row), [ia, ir](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    t.accumulate(ia, g);
    if (t.node(ir).requires_grad) {
      t.accumulate(ir, g.colwise().sum());
    }
  });
}

Var Tape::sub(Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("sub: shape mismatch");
  int ia = a.id_, ib = b.id_;
  return push(a.value() - b.value(), needs(a) || needs(b), [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.node(self).grad);
    if (t.node(ib).requires_grad) t.accumulate(ib, -t.node(self).grad);
  });
}

Var Tape::cmul(Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("cmul: shape mismatch");
  int ia = a.id_, ib = b.id_;
  return push(a.value().cwiseProduct(b.value()), needs(a) || needs(b),
              [ia, ib](Tape& t, int self) {
                const Matrix& g = t.node(self).grad;
                if (t.node(ia).requires_grad)
                  t.accumulate(ia, g.cwiseProduct(t.node(ib).val));
                if (t.node(ib).requires_grad)
                  t.accumulate(ib, g.cwiseProduct(t.node(ia).val));
              });
}

Var Tape::scale(Var a, double s) {
  int ia = a.id_;
  return push(a.value() * s, needs(a), [ia, s](Tape& t, int self) {
    t.accumulate(ia, t.node(self).grad * s);
  });
}

Var Tape::add_scalar(Var a, double s) {
  int ia = a.id_;
  return push(a.value().array() + s, needs(a), [ia](Tape& t, int self) {
    t.accumulate(ia, t.node(self).grad);
  });
}

Var Tape::relu(Var a) {
  int ia = a.id_;
  return push(a.value().cwiseMax(0.0), needs(a), [ia](Tape& t, int self) {
    Matrix g = t.node(self).grad;
    const double* v = t.node(ia).val.data();
    double* gd = g.data();
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (v[j] <= 0.0) gd[j] = 0.0;
    }
    t.accumulate(ia, g);
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  int ia = a.id_;
  Matrix out = a.value().unaryExpr([slope](double x) { return x > 0 ? x : slope * x; });
  return push(std::move(out), needs(a), [ia, slope](Tape& t, int self) {
    Matrix g = t.node(self).grad;
    const double* v = t.node(ia).val.data();
    double* gd = g.data();
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (v[j] <= 0.0) gd[j] *= slope;
    }
    t.accumulate(ia, g);
  });
}

Var Tape::elu(Var a) {
  int ia = a.id_;
  Matrix out = a.value().unaryExpr([](double x) { return x > 0 ? x : std::expm1(x); });
  return push(std::move(out), needs(a), [ia](Tape& t, int self) {
    Matrix g = t.node(self).grad;
    const double* v = t.node(ia).val.data();
    const double* o = t.node(self).val.data();
    double* gd = g.data();
    for (Eigen::Index j = 0; j < g.size(); ++j) {
      if (v[j] <= 0.0) gd[j] *= o[j] + 1.0;  // d elu = exp(x) = elu + 1 for x<=0
    }
    t.accumulate(ia, g);
  });
}

Var Tape::sigmoid(Var a) {
  int ia = a.id_;
  Matrix out = a.value().unaryExpr(
      [](double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); });
  return push(std::move(out), needs(a), [ia](Tape& t, int self) {
    const Matrix& o = t.node(self).val;
    Matrix g = t.node(self).grad.cwiseProduct(
        o.cwiseProduct(Matrix::Ones(o.rows(), o.cols()) - o));
    t.accumulate(ia, g);
  });
}

Var Tape::log(Var a) {
  int ia = a.id_;
  return push(a.value().array().log(), needs(a), [ia](Tape& t, int self) {
    t.accumulate(ia, t.node(self).grad.cwiseQuotient(t.node(ia).val));
  });
}

Var Tape::dropout(Var a, const Matrix& mask) {
  if (mask.rows() != a.rows() || mask.cols() != a.cols()) {
    throw ShapeError("dropout: mask shape mismatch");
  }
  int ia = a.id_;
  auto m = std::make_shared<Matrix>(mask);
  return push(a.value().cwiseProduct(*m), needs(a), [ia, m](Tape& t, int self) {
    t.accumulate(ia, t.node(self).grad.cwiseProduct(*m));
  });
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
  int ia = a.id_;
  Matrix out(static_cast<Eigen::Index>(idx.size()), a.cols());
  for (size_t i = 0; i < idx.size(); ++i) out.row(i) = a.value().row(idx[i]);
  auto ix = std::make_shared<std::vector<int>>(std::move(idx));
  return push(std::move(out), needs(a), [ia, ix](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    Matrix acc = Matrix::Zero(t.node(ia).val.rows(), t.node(ia).val.cols());
    for (size_t i = 0; i < ix->size(); ++i) acc.row((*ix)[i]) += g.row(i);
    t.accumulate(ia, acc);
  });
}

Var Tape::segment_sum(Var a, std::vector<int> seg, int segment_count) {
  if (static_cast<Eigen::Index>(seg.size()) != a.rows()) {
    throw ShapeError("segment_sum: segment ids must match row count");
  }
  int ia = a.id_;
  Matrix out = Matrix::Zero(segment_count, a.cols());
  for (size_t i = 0; i < seg.size(); ++i) out.row(seg[i]) += a.value().row(i);
  auto sg = std::make_shared<std::vector<int>>(std::move(seg));
  return push(std::move(out), needs(a), [ia, sg](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    Matrix acc(static_cast<Eigen::Index>(sg->size()), g.cols());
    for (size_t i = 0; i < sg->size(); ++i) acc.row(i) = g.row((*sg)[i]);
    t.accumulate(ia, acc);
  });
}

Var Tape::segment_mean(Var a, std::vector<int> seg, int segment_count) {
  if (static_cast<Eigen::Index>(seg.size()) != a.rows()) {
    throw ShapeError("segment_mean: segment ids must match row count");
  }
  int ia = a.id_;
  std::vector<double> inv_count(segment_count, 0.0);
  for (int s : seg) inv_count[s] += 1.0;
  for (double& c : inv_count) c = c > 0 ? 1.0 / c : 0.0;
  Matrix out = Matrix::Zero(segment_count, a.cols());
  for (size_t i = 0; i < seg.size(); ++i) {
    out.row(seg[i]) += a.value().row(i) * inv_count[seg[i]];
  }
  auto sg = std::make_shared<std::vector<int>>(std::move(seg));
  auto ic = std::make_shared<std::vector<double>>(std::move(inv_count));
  return push(std::move(out), needs(a), [ia, sg, ic](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    Matrix acc(static_cast<Eigen::Index>(sg->size()), g.cols());
    for (size_t i = 0; i < sg->size(); ++i) {
      acc.row(i) = g.row((*sg)[i]) * (*ic)[(*sg)[i]];
    }
    t.accumulate(ia, acc);
  });
}

Var Tape::segment_softmax(Var scores, std::vector<int> seg, int segment_count) {
  if (scores.cols() != 1) throw ShapeError("segment_softmax: scores must be n x 1");
  if (static_cast<Eigen::Index>(seg.size()) != scores.rows()) {
    throw ShapeError("segment_softmax: segment ids must match row count");
  }
  int ia = scores.id_;
  const Eigen::Index n = scores.rows();
  std::vector<double> seg_max(segment_count, -std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < n; ++i) {
    seg_max[seg[i]] = std::max(seg_max[seg[i]], scores.value()(i, 0));
  }
  Matrix out(n, 1);
  std::vector<double> seg_sum(segment_count, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i, 0) = std::exp(scores.value()(i, 0) - seg_max[seg[i]]);
    seg_sum[seg[i]] += out(i, 0);
  }
  for (Eigen::Index i = 0; i < n; ++i) out(i, 0) /= seg_sum[seg[i]];
  auto sg = std::make_shared<std::vector<int>>(std::move(seg));
  int nseg = segment_count;
  return push(std::move(out), needs(scores), [ia, sg, nseg](Tape& t, int self) {
    const Matrix& p = t.node(self).val;
    const Matrix& g = t.node(self).grad;
    // d/ds_i = p_i * (g_i - sum_j in segment p_j g_j)
    std::vector<double> dot(nseg, 0.0);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      dot[(*sg)[i]] += p(i, 0) * g(i, 0);
    }
    Matrix acc(p.rows(), 1);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      acc(i, 0) = p(i, 0) * (g(i, 0) - dot[(*sg)[i]]);
    }
    t.accumulate(ia, acc);
  });
}

Var Tape::mul_col_broadcast(Var a, Var w) {
  if (w.cols() != 1 || w.rows() != a.rows()) {
    throw ShapeError("mul_col_broadcast: w must be rows x 1");
  }
  int ia = a.id_, iw = w.id_;
  Matrix out = a.value().array().colwise() * w.value().col(0).array();
  return push(std::move(out), needs(a) || needs(w), [ia, iw](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) {
      Matrix ga = g.array().colwise() * t.node(iw).val.col(0).array();
      t.accumulate(ia, ga);
    }
    if (t.node(iw).requires_grad) {
      Matrix gw = g.cwiseProduct(t.node(ia).val).rowwise().sum();
      t.accumulate(iw, gw);
    }
  });
}

Var Tape::div_col_broadcast(Var a, Var d, double eps) {
  if (d.cols() != 1 || d.rows() != a.rows()) {
    throw ShapeError("div_col_broadcast: d must be rows x 1");
  }
  int ia = a.id_, id = d.id_;
  Eigen::ArrayXd denom = d.value().col(0).array() + eps;
  Matrix out = a.value().array().colwise() / denom;
  auto dn = std::make_shared<Eigen::ArrayXd>(std::move(denom));
  return push(std::move(out), needs(a) || needs(d), [ia, id, dn](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) {
      Matrix ga = g.array().colwise() / (*dn);
      t.accumulate(ia, ga);
    }
    if (t.node(id).requires_grad) {
      // d(a/denom)/d(denom) = -a / denom^2
      Matrix num = g.cwiseProduct(t.node(ia).val).rowwise().sum();
      Matrix gd = (-num.col(0).array() / ((*dn) * (*dn))).matrix();
      t.accumulate(id, gd);
    }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no parts");
  Eigen::Index rows = parts.front().rows(), cols = 0;
  bool rg = false;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row mismatch");
    cols += p.cols();
    rg = rg || needs(p);
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id_);
    offsets.push_back(at);
    at += p.cols();
  }
  auto idv = std::make_shared<std::vector<int>>(std::move(ids));
  auto offv = std::make_shared<std::vector<Eigen::Index>>(std::move(offsets));
  return push(std::move(out), rg, [idv, offv](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    for (size_t k = 0; k < idv->size(); ++k) {
      int id = (*idv)[k];
      Eigen::Index w = t.node(id).val.cols();
      t.accumulate(id, g.middleCols((*offv)[k], w));
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no parts");
  Eigen::Index cols = parts.front().cols(), rows = 0;
  bool rg = false;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column mismatch");
    rows += p.rows();
    rg = rg || needs(p);
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  std::vector<Eigen::Index> offsets;
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    ids.push_back(p.id_);
    offsets.push_back(at);
    at += p.rows();
  }
  auto idv = std::make_shared<std::vector<int>>(std::move(ids));
  auto offv = std::make_shared<std::vector<Eigen::Index>>(std::move(offsets));
  return push(std::move(out), rg, [idv, offv](Tape& t, int self) {
    const Matrix& g = t.node(self).grad;
    for (size_t k = 0; k < idv->size(); ++k) {
      int id = (*idv)[k];
      Eigen::Index h = t.node(id).val.rows();
      t.accumulate(id, g.middleRows((*offv)[k], h));
    }
  });
}

Var Tape::sum_all(Var a) {
  int ia = a.id_;
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return push(std::move(out), needs(a), [ia](Tape& t, int self) {
    double g = t.node(self).grad(0, 0);
    const Matrix& v = t.node(ia).val;
    t.accumulate(ia, Matrix::Constant(v.rows(), v.cols(), g));
  });
}

Var Tape::mean_all(Var a) {
  Var s = sum_all(a);
  return scale(s, 1.0 / static_cast<double>(a.rows() * a.cols()));
}

Var Tape::softmax_cross_entropy(Var logits, std::vector<int> labels,
                                std::vector<double> row_weights) {
  const Eigen::Index n = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n ||
      static_cast<Eigen::Index>(row_weights.size()) != n) {
    throw ShapeError("softmax_cross_entropy: labels/weights must match rows");
  }
  double weight_sum = 0.0;
  for (double w : row_weights) weight_sum += w;
  if (weight_sum <= 0.0) {
    throw DegenerateInputError("softmax_cross_entropy: no weighted rows");
  }
  auto probs = std::make_shared<Matrix>(n, logits.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= logits.cols()) {
      throw ShapeError("softmax_cross_entropy: label out of range");
    }
    Eigen::RowVectorXd row = logits.value().row(i);
    double mx = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - mx).exp();
    double z = e.sum();
    probs->row(i) = e / z;
    loss -= row_weights[i] * std::log(std::max((*probs)(i, labels[i]), 1e-300));
  }
  loss /= weight_sum;
  int il = logits.id_;
  auto lab = std::make_shared<std::vector<int>>(std::move(labels));
  auto wts = std::make_shared<std::vector<double>>(std::move(row_weights));
  Matrix out(1, 1);
  out(0, 0) = loss;
  return push(std::move(out), needs(logits),
              [il, lab, wts, probs, weight_sum](Tape& t, int self) {
                double g = t.node(self).grad(0, 0);
                Matrix dl = *probs;
                for (Eigen::Index i = 0; i < dl.rows(); ++i) {
                  dl(i, (*lab)[i]) -= 1.0;
                  dl.row(i) *= g * (*wts)[i] / weight_sum;
                }
                t.accumulate(il, dl);
              });
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw ArgumentError("backward: var from another tape");
  Node& l = nodes_[loss.id_];
  if (l.val.rows() != 1 || l.val.cols() != 1) {
    throw ShapeError("backward: loss must be 1x1");
  }
  if (!l.requires_grad) return;
  l.grad = Matrix::Ones(1, 1);
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.back && n.requires_grad && n.grad.size() != 0) {
      n.back(*this, i);
    }
  }
}

}  // namespace graphbd::ad
