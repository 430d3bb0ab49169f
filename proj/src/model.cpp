#include "graphbd/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <utility>

#include "graphbd/error.hpp"

namespace graphbd {

namespace {

constexpr std::uint64_t kInitTag = 0x494e4954;  // parameter-init seed stream
constexpr double kLeakySlope = 0.2;
constexpr double kMaskLogEps = 1e-12;  // keeps log(weight) finite at weight 0
constexpr double kMeanEps = 1e-12;     // guards weighted means on isolated nodes
constexpr int kInferenceChunk = 256;   // graphs per inference forward pass

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Eigen::MatrixXd glorot_uniform(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  }
  return m;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::RowVectorXd row = logits.row(i);
    double mx = row.maxCoeff();
    Eigen::RowVectorXd e = (row.array() - mx).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

ad::Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 - p;
  const double inv = 1.0 / keep;
  ad::Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng) < keep ? inv : 0.0;
  }
  return m;
}

int params_per_layer(const ModelConfig& c) {
  switch (c.architecture) {
    case Architecture::Gin: return 4;        // w1, b1, w2, b2
    case Architecture::GraphSage: return 3;  // w_self, w_neigh, b
    case Architecture::Gat: return 3 * c.attention_heads;
  }
  throw ArgumentError("unknown architecture");
}

// Shared state for one forward pass over one packed input.
struct ForwardCtx {
  ad::Tape* t = nullptr;
  const PackedGraphs* packed = nullptr;
  std::optional<ad::Var> arc_w;            // per-arc weights (mask), if any
  std::vector<int> src_loops, dst_loops;   // arcs plus self-loops (GAT)
  std::optional<ad::Var> dense_in;         // lazily-made constant of dense features
};

// input * w, where input is the previous layer (if present) or the packed
// node features, which may be sparse. All layer transforms are linear, so
// features can be projected before aggregation.
ad::Var input_times(ForwardCtx& ctx, const std::optional<ad::Var>& h, ad::Var w) {
  if (h) return ctx.t->matmul(*h, w);
  if (ctx.packed->sparse()) return ctx.t->sparse_matmul(ctx.packed->sparse_x, w);
  if (!ctx.dense_in) ctx.dense_in = ctx.t->constant(ctx.packed->dense_x);
  return ctx.t->matmul(*ctx.dense_in, w);
}

ad::Var layer_forward(ForwardCtx& ctx, const ModelConfig& cfg,
                      const std::vector<ad::Var>& params, int layer,
                      const std::optional<ad::Var>& h) {
  ad::Tape& t = *ctx.t;
  const PackedGraphs& packed = *ctx.packed;
  const int n = packed.node_count;
  const bool has_arcs = !packed.src.empty();
  int pi = layer * params_per_layer(cfg);

  switch (cfg.architecture) {
    case Architecture::Gin: {
      ad::Var w1 = params[pi], b1 = params[pi + 1], w2 = params[pi + 2], b2 = params[pi + 3];
      ad::Var q = input_times(ctx, h, w1);
      if (has_arcs) {
        ad::Var msg = t.gather_rows(q, packed.src);
        if (ctx.arc_w) msg = t.mul_col_broadcast(msg, *ctx.arc_w);
        q = t.add(q, t.segment_sum(msg, packed.dst, n));
      }
      q = t.relu(t.add_row_broadcast(q, b1));
      return t.relu(t.linear(q, w2, b2));
    }
    case Architecture::GraphSage: {
      ad::Var ws = params[pi], wn = params[pi + 1], b = params[pi + 2];
      ad::Var pre = input_times(ctx, h, ws);
      if (has_arcs) {
        ad::Var msg = t.gather_rows(input_times(ctx, h, wn), packed.src);
        ad::Var mean;
        if (ctx.arc_w) {
          msg = t.mul_col_broadcast(msg, *ctx.arc_w);
          ad::Var num = t.segment_sum(msg, packed.dst, n);
          ad::Var den = t.segment_sum(*ctx.arc_w, packed.dst, n);
          mean = t.div_col_broadcast(num, den, kMeanEps);
        } else {
          mean = t.segment_mean(msg, packed.dst, n);
        }
        pre = t.add(pre, mean);
      }
      return t.relu(t.add_row_broadcast(pre, b));
    }
    case Architecture::Gat: {
      std::vector<ad::Var> heads;
      heads.reserve(cfg.attention_heads);
      for (int hd = 0; hd < cfg.attention_heads; ++hd) {
        ad::Var w = params[pi + 3 * hd];
        ad::Var a_src = params[pi + 3 * hd + 1];
        ad::Var a_dst = params[pi + 3 * hd + 2];
        ad::Var q = input_times(ctx, h, w);
        ad::Var s_src = t.matmul(q, a_src);  // n x 1
        ad::Var s_dst = t.matmul(q, a_dst);
        ad::Var e_self = t.leaky_relu(t.add(s_src, s_dst), kLeakySlope);
        ad::Var scores = e_self;
        if (has_arcs) {
          ad::Var e = t.add(t.gather_rows(s_src, packed.src),
                            t.gather_rows(s_dst, packed.dst));
          e = t.leaky_relu(e, kLeakySlope);
          // A masked edge scales its unnormalized attention by the mask value.
          if (ctx.arc_w) e = t.add(e, t.log(t.add_scalar(*ctx.arc_w, kMaskLogEps)));
          scores = t.concat_rows({e, e_self});
        }
        ad::Var alpha = t.segment_softmax(scores, ctx.dst_loops, n);
        ad::Var msg = t.mul_col_broadcast(t.gather_rows(q, ctx.src_loops), alpha);
        heads.push_back(t.segment_sum(msg, ctx.dst_loops, n));
      }
      ad::Var cat = heads.size() == 1 ? heads.front() : t.concat_cols(heads);
      return t.elu(cat);
    }
  }
  throw ArgumentError("unknown architecture");
}

ForwardCtx make_ctx(ad::Tape& t, const PackedGraphs& packed, const ModelConfig& cfg,
                    const ad::Var* edge_weights) {
  ForwardCtx ctx;
  ctx.t = &t;
  ctx.packed = &packed;
  if (edge_weights != nullptr) {
    if (edge_weights->cols() != 1 ||
        edge_weights->rows() != packed.undirected_edge_count) {
      throw ShapeError("edge weights must be one column with one row per edge");
    }
    if (!packed.arc_edge.empty()) {
      ctx.arc_w = t.gather_rows(*edge_weights, packed.arc_edge);
    }
  }
  if (cfg.architecture == Architecture::Gat) {
    ctx.src_loops = packed.src;
    ctx.dst_loops = packed.dst;
    ctx.src_loops.reserve(ctx.src_loops.size() + packed.node_count);
    ctx.dst_loops.reserve(ctx.dst_loops.size() + packed.node_count);
    for (int i = 0; i < packed.node_count; ++i) {
      ctx.src_loops.push_back(i);
      ctx.dst_loops.push_back(i);
    }
  }
  return ctx;
}

PackedGraphs pack_one(const Graph& graph, bool allow_sparse) {
  validate_graph(graph);
  PackedGraphs p;
  p.node_count = graph.node_count;
  p.graph_count = 1;
  p.feature_dim = graph.feature_dim();
  p.undirected_edge_count = graph.edge_count();
  p.node_segment.assign(graph.node_count, 0);
  if (graph.graph_label) p.graph_labels.push_back(*graph.graph_label);
  p.src.reserve(2 * graph.edge_count());
  p.dst.reserve(2 * graph.edge_count());
  p.arc_edge.reserve(2 * graph.edge_count());
  for (int e = 0; e < graph.edge_count(); ++e) {
    auto [u, v] = graph.edges[e];
    p.src.push_back(u);
    p.dst.push_back(v);
    p.arc_edge.push_back(e);
    p.src.push_back(v);
    p.dst.push_back(u);
    p.arc_edge.push_back(e);
  }
  const Eigen::MatrixXd& x = graph.node_features;
  const auto total = static_cast<double>(x.size());
  double nnz = static_cast<double>((x.array() != 0.0).count());
  if (allow_sparse && x.cols() >= 128 && total > 0 && nnz / total < 0.05) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(nnz));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (x(r, c) != 0.0) trips.emplace_back(static_cast<int>(r), static_cast<int>(c), x(r, c));
      }
    }
    auto sp = std::make_shared<ad::SparseMatrix>(x.rows(), x.cols());
    sp->setFromTriplets(trips.begin(), trips.end());
    sp->makeCompressed();
    p.sparse_x = std::move(sp);
  } else {
    p.dense_x = x;
  }
  return p;
}

}  // namespace

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::Gin: return "gin";
    case Architecture::GraphSage: return "graphsage";
    case Architecture::Gat: return "gat";
  }
  return "?";
}

std::string to_string(Readout r) { return r == Readout::Sum ? "sum" : "mean"; }

std::string to_string(TaskKind t) {
  return t == TaskKind::GraphClassification ? "graph" : "node";
}

Architecture architecture_from_string(const std::string& name) {
  std::string s = lower(name);
  if (s == "gin") return Architecture::Gin;
  if (s == "graphsage" || s == "sage") return Architecture::GraphSage;
  if (s == "gat") return Architecture::Gat;
  throw ArgumentError("unknown architecture '" + name + "' (expected gin, graphsage, or gat)");
}

Readout readout_from_string(const std::string& name) {
  std::string s = lower(name);
  if (s == "sum") return Readout::Sum;
  if (s == "mean") return Readout::Mean;
  throw ArgumentError("unknown readout '" + name + "' (expected sum or mean)");
}

TaskKind task_from_string(const std::string& name) {
  std::string s = lower(name);
  if (s == "graph") return TaskKind::GraphClassification;
  if (s == "node") return TaskKind::NodeClassification;
  throw ArgumentError("unknown task '" + name + "' (expected graph or node)");
}

ModelConfig default_graph_config(Architecture arch) {
  ModelConfig c;
  c.architecture = arch;
  switch (arch) {
    case Architecture::Gin:
      c.layer_count = 3;
      c.readout = Readout::Sum;
      break;
    case Architecture::GraphSage:
      c.layer_count = 2;
      c.readout = Readout::Mean;
      break;
    case Architecture::Gat:
      c.layer_count = 2;
      c.attention_heads = 8;
      c.readout = Readout::Mean;
      break;
  }
  c.hidden_dim = 64;
  c.learning_rate = 0.01;
  c.epochs = 200;
  c.batch_size = 32;
  return c;
}

ModelConfig default_node_config(Architecture arch) {
  ModelConfig c = default_graph_config(arch);
  c.epochs = 300;
  c.dropout = 0.5;
  c.weight_decay = 5e-4;
  return c;
}

void validate_config(const ModelConfig& c) {
  if (c.layer_count < 1) throw ArgumentError("layer_count must be at least 1");
  if (c.hidden_dim < 1) throw ArgumentError("hidden_dim must be at least 1");
  if (c.attention_heads < 1) throw ArgumentError("attention_heads must be at least 1");
  if (!(c.learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (c.epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ArgumentError("dropout must be in [0,1)");
  if (c.weight_decay < 0.0) throw ArgumentError("weight_decay must be non-negative");
  if (c.batch_size < 1) throw ArgumentError("batch_size must be at least 1");
}

PackedGraphs pack_graphs(const GraphDataset& data, const std::vector<int>& indices) {
  PackedGraphs p;
  p.feature_dim = data.feature_dim();
  p.graph_count = static_cast<int>(indices.size());
  int total_nodes = 0, total_edges = 0;
  for (int gi : indices) {
    if (gi < 0 || gi >= data.size()) throw ArgumentError("pack_graphs: graph index out of range");
    total_nodes += data.graphs[gi].node_count;
    total_edges += data.graphs[gi].edge_count();
  }
  p.node_count = total_nodes;
  p.undirected_edge_count = total_edges;
  p.dense_x.resize(total_nodes, p.feature_dim);
  p.node_segment.resize(total_nodes);
  p.src.reserve(2 * total_edges);
  p.dst.reserve(2 * total_edges);
  p.arc_edge.reserve(2 * total_edges);
  p.graph_labels.reserve(indices.size());
  int node_off = 0, edge_off = 0, seg = 0;
  for (int gi : indices) {
    const Graph& g = data.graphs[gi];
    if (g.feature_dim() != p.feature_dim) {
      throw ShapeError("pack_graphs: feature dimension mismatch");
    }
    p.dense_x.middleRows(node_off, g.node_count) = g.node_features;
    std::fill(p.node_segment.begin() + node_off,
              p.node_segment.begin() + node_off + g.node_count, seg);
    for (int e = 0; e < g.edge_count(); ++e) {
      auto [u, v] = g.edges[e];
      p.src.push_back(node_off + u);
      p.dst.push_back(node_off + v);
      p.arc_edge.push_back(edge_off + e);
      p.src.push_back(node_off + v);
      p.dst.push_back(node_off + u);
      p.arc_edge.push_back(edge_off + e);
    }
    p.graph_labels.push_back(g.graph_label.value_or(-1));
    node_off += g.node_count;
    edge_off += g.edge_count();
    ++seg;
  }
  return p;
}

PackedGraphs pack_single(const Graph& graph) { return pack_one(graph, true); }

GnnModel::GnnModel(ModelConfig config, TaskKind task, int feature_dim, int class_count)
    : config_(config), task_(task), feature_dim_(feature_dim), class_count_(class_count) {
  validate_config(config_);
  if (feature_dim_ < 1) throw ArgumentError("feature_dim must be at least 1");
  if (class_count_ < 2) throw ArgumentError("class_count must be at least 2");
  init_parameters();
}

int GnnModel::gat_head_dim() const {
  return std::max(1, config_.hidden_dim / config_.attention_heads);
}

int GnnModel::embedding_dim() const {
  if (config_.architecture == Architecture::Gat) {
    return config_.attention_heads * gat_head_dim();
  }
  return config_.hidden_dim;
}

void GnnModel::init_parameters() {
  const int hidden = config_.hidden_dim;
  auto shape_of = [&](int layer) {
    return layer == 0 ? feature_dim_ : embedding_dim();
  };
  std::vector<std::pair<std::string, std::pair<int, int>>> layout;
  for (int k = 0; k < config_.layer_count; ++k) {
    const std::string base = "layer" + std::to_string(k) + ".";
    const int in = shape_of(k);
    switch (config_.architecture) {
      case Architecture::Gin:
        layout.push_back({base + "w1", {in, hidden}});
        layout.push_back({base + "b1", {1, hidden}});
        layout.push_back({base + "w2", {hidden, hidden}});
        layout.push_back({base + "b2", {1, hidden}});
        break;
      case Architecture::GraphSage:
        layout.push_back({base + "w_self", {in, hidden}});
        layout.push_back({base + "w_neigh", {in, hidden}});
        layout.push_back({base + "b", {1, hidden}});
        break;
      case Architecture::Gat: {
        const int dh = gat_head_dim();
        for (int h = 0; h < config_.attention_heads; ++h) {
          const std::string hb = base + "head" + std::to_string(h) + ".";
          layout.push_back({hb + "w", {in, dh}});
          layout.push_back({hb + "a_src", {dh, 1}});
          layout.push_back({hb + "a_dst", {dh, 1}});
        }
        break;
      }
    }
  }
  layout.push_back({"head.w", {embedding_dim(), class_count_}});
  layout.push_back({"head.b", {1, class_count_}});

  params_.clear();
  param_names_.clear();
  for (size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, shape] = layout[i];
    param_names_.push_back(name);
    // Biases and the classifier head start at zero — the head in particular,
    // so initial logits are neutral instead of readout-scaled (sum readout
    // over tens of nodes would otherwise saturate the softmax and stall the
    // first epochs). Everything else gets a fan-balanced uniform init.
    bool zero_init = name.ends_with(".b") || name.ends_with(".b1") ||
                     name.ends_with(".b2") || name == "head.w";
    if (zero_init) {
      params_.push_back(Eigen::MatrixXd::Zero(shape.first, shape.second));
    } else {
      Rng rng = make_rng(derive_seed(config_.seed, kInitTag, static_cast<std::uint64_t>(i)));
      params_.push_back(glorot_uniform(shape.first, shape.second, rng));
    }
  }
}

void GnnModel::set_parameters(std::vector<Eigen::MatrixXd> values) {
  if (values.size() != params_.size()) {
    throw ShapeError("set_parameters: expected " + std::to_string(params_.size()) +
                     " tensors, got " + std::to_string(values.size()));
  }
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i].rows() != params_[i].rows() || values[i].cols() != params_[i].cols()) {
      throw ShapeError("set_parameters: shape mismatch for " + param_names_[i]);
    }
  }
  params_ = std::move(values);
}

std::vector<ad::Var> GnnModel::bind_parameters(ad::Tape& tape, bool requires_grad) const {
  std::vector<ad::Var> vars;
  vars.reserve(params_.size());
  for (const auto& p : params_) {
    vars.push_back(requires_grad ? tape.leaf(p) : tape.constant(p));
  }
  return vars;
}

ad::Var GnnModel::logits(ad::Tape& tape, const std::vector<ad::Var>& params,
                         const PackedGraphs& packed, const ForwardOptions& options) const {
  if (packed.feature_dim != feature_dim_) {
    throw ShapeError("logits: input feature dimension " + std::to_string(packed.feature_dim) +
                     " does not match model feature dimension " + std::to_string(feature_dim_));
  }
  if (params.size() != params_.size()) {
    throw ArgumentError("logits: wrong number of bound parameters");
  }
  if (packed.node_count == 0) throw DegenerateInputError("logits: empty input");

  ForwardCtx ctx = make_ctx(tape, packed, config_, options.edge_weights);
  std::optional<ad::Var> h;
  for (int k = 0; k < config_.layer_count; ++k) {
    h = layer_forward(ctx, config_, params, k, h);
    if (options.dropout_rng != nullptr && config_.dropout > 0.0) {
      h = tape.dropout(*h, dropout_mask(h->rows(), h->cols(), config_.dropout,
                                        *options.dropout_rng));
    }
  }
  ad::Var head_w = params[params.size() - 2];
  ad::Var head_b = params[params.size() - 1];
  if (task_ == TaskKind::GraphClassification) {
    ad::Var pooled = config_.readout == Readout::Sum
                         ? tape.segment_sum(*h, packed.node_segment, packed.graph_count)
                         : tape.segment_mean(*h, packed.node_segment, packed.graph_count);
    return tape.linear(pooled, head_w, head_b);
  }
  return tape.linear(*h, head_w, head_b);
}

Eigen::MatrixXd GnnModel::predict_graphs(const GraphDataset& data,
                                         const std::vector<int>& indices) const {
  if (task_ != TaskKind::GraphClassification) {
    throw ArgumentError("predict_graphs: model was built for the node task");
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(indices.size()), class_count_);
  for (size_t start = 0; start < indices.size(); start += kInferenceChunk) {
    size_t len = std::min(indices.size() - start, static_cast<size_t>(kInferenceChunk));
    std::vector<int> chunk(indices.begin() + start, indices.begin() + start + len);
    PackedGraphs packed = pack_graphs(data, chunk);
    ad::Tape tape;
    auto params = bind_parameters(tape, false);
    ad::Var lg = logits(tape, params, packed, {});
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(len)) =
        softmax_rows(lg.value());
  }
  return out;
}

Eigen::VectorXd GnnModel::predict_graph(const Graph& graph) const {
  if (task_ != TaskKind::GraphClassification) {
    throw ArgumentError("predict_graph: model was built for the node task");
  }
  PackedGraphs packed = pack_single(graph);
  ad::Tape tape;
  auto params = bind_parameters(tape, false);
  ad::Var lg = logits(tape, params, packed, {});
  return softmax_rows(lg.value()).row(0).transpose();
}

Eigen::MatrixXd GnnModel::predict_nodes(const Graph& graph) const {
  if (task_ != TaskKind::NodeClassification) {
    throw ArgumentError("predict_nodes: model was built for the graph task");
  }
  PackedGraphs packed = pack_single(graph);
  ad::Tape tape;
  auto params = bind_parameters(tape, false);
  ad::Var lg = logits(tape, params, packed, {});
  return softmax_rows(lg.value());
}

int GnnModel::predicted_graph_label(const Graph& graph) const {
  Eigen::VectorXd probs = predict_graph(graph);
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

double GnnModel::accuracy(const GraphDataset& data, const std::vector<int>& indices) const {
  if (indices.empty()) throw DegenerateInputError("accuracy: empty graph split");
  Eigen::MatrixXd probs = predict_graphs(data, indices);
  int correct = 0;
  for (size_t i = 0; i < indices.size(); ++i) {
    const auto& label = data.graphs[indices[i]].graph_label;
    if (!label) throw ArgumentError("accuracy: graph without a label");
    Eigen::Index best = 0;
    probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    if (static_cast<int>(best) == *label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

double GnnModel::accuracy(const NodeTaskDataset& data, const std::vector<char>& mask) const {
  if (static_cast<int>(mask.size()) != data.graph.node_count) {
    throw ShapeError("accuracy: mask length must equal node count");
  }
  int total = 0;
  for (char m : mask) total += m ? 1 : 0;
  if (total == 0) throw DegenerateInputError("accuracy: empty node split");
  Eigen::MatrixXd probs = predict_nodes(data.graph);
  int correct = 0;
  for (int v = 0; v < data.graph.node_count; ++v) {
    if (!mask[v]) continue;
    Eigen::Index best = 0;
    probs.row(v).maxCoeff(&best);
    if (static_cast<int>(best) == data.graph.node_labels[v]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

Eigen::MatrixXd aggregate_layer(const GnnModel& model, const Graph& graph, int layer,
                                const Eigen::MatrixXd& z_prev) {
  const ModelConfig& cfg = model.config();
  if (layer < 0 || layer >= cfg.layer_count) {
    throw ArgumentError("aggregate_layer: layer index out of range");
  }
  if (z_prev.rows() != graph.node_count) {
    throw ShapeError("aggregate_layer: input row count must equal node count");
  }
  PackedGraphs packed = pack_one(graph, false);
  ad::Tape tape;
  auto params = model.bind_parameters(tape, false);
  ForwardCtx ctx = make_ctx(tape, packed, cfg, nullptr);
  std::optional<ad::Var> h = tape.constant(z_prev);
  // Layer 0 consumes feature_dim-wide input, later layers the embedding width;
  // layer_forward's matmul rejects anything inconsistent.
  ad::Var out = layer_forward(ctx, cfg, params, layer, h);
  return out.value();
}

Eigen::MatrixXd neighbor_mean(const Graph& graph, const Eigen::MatrixXd& features) {
  if (features.rows() != graph.node_count) {
    throw ShapeError("neighbor_mean: row count must equal node count");
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(graph.node_count, features.cols());
  auto adj = graph.adjacency_list();
  for (int v = 0; v < graph.node_count; ++v) {
    if (adj[v].empty()) continue;
    for (int u : adj[v]) out.row(v) += features.row(u);
    out.row(v) /= static_cast<double>(adj[v].size());
  }
  return out;
}

Eigen::RowVectorXd readout(const Eigen::MatrixXd& z, Readout mode) {
  if (z.rows() == 0) throw DegenerateInputError("readout: empty embedding matrix");
  Eigen::RowVectorXd sum = z.colwise().sum();
  if (mode == Readout::Mean) sum /= static_cast<double>(z.rows());
  return sum;
}

Eigen::VectorXd predict_node_exact(
    const GnnModel& model, const Graph& graph, int node,
    const std::vector<std::pair<int, Eigen::RowVectorXd>>& feature_overrides) {
  if (model.task() != TaskKind::NodeClassification) {
    throw ArgumentError("predict_node_exact: model was built for the graph task");
  }
  if (node < 0 || node >= graph.node_count) {
    throw ArgumentError("predict_node_exact: node out of range");
  }
  // Everything that can influence this node's output after K rounds lives in
  // its K-hop ball, and every node whose neighborhood is actually aggregated
  // (distance <= K-1) keeps its full neighborhood inside the ball, so the
  // induced subgraph reproduces the full-graph prediction exactly.
  std::vector<int> ball = k_hop_neighborhood(graph, node, model.config().layer_count);
  Graph sub = induced_subgraph(graph, ball);
  for (const auto& [orig, row] : feature_overrides) {
    if (orig < 0 || orig >= graph.node_count) {
      throw ArgumentError("predict_node_exact: override node out of range");
    }
    if (row.cols() != sub.node_features.cols()) {
      throw ShapeError("predict_node_exact: override feature width mismatch");
    }
    auto it = std::lower_bound(ball.begin(), ball.end(), orig);
    if (it != ball.end() && *it == orig) {
      sub.node_features.row(it - ball.begin()) = row;
    }
  }
  auto center = std::lower_bound(ball.begin(), ball.end(), node) - ball.begin();
  PackedGraphs packed = pack_single(sub);
  ad::Tape tape;
  auto params = model.bind_parameters(tape, false);
  ad::Var lg = model.logits(tape, params, packed, {});
  return softmax_rows(lg.value()).row(center).transpose();
}

}  // namespace graphbd
