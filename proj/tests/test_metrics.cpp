#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>
#include <vector>

#include "graphbd/error.hpp"
#include "graphbd/metrics.hpp"
#include "graphbd/model.hpp"
#include "graphbd/splits.hpp"
#include "synthetic.hpp"

using namespace graphbd;

namespace {

// Single-feature GIN whose graph prediction is [mean feature > 0.5], wired by
// hand so success rates have exact expected values.
GnnModel threshold_model() {
  ModelConfig cfg = default_graph_config(Architecture::Gin);
  cfg.layer_count = 1;
  cfg.hidden_dim = 1;
  cfg.seed = 1;
  GnnModel model(cfg, TaskKind::GraphClassification, 1, 2);

  std::vector<Eigen::MatrixXd> params = model.parameters();
  const std::vector<std::string>& names = model.parameter_names();
  auto at = [&](const std::string& name) -> Eigen::MatrixXd& {
    for (size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return params[i];
    }
    throw std::runtime_error("parameter not found: " + name);
  };
  at("layer0.w1") = Eigen::MatrixXd::Ones(1, 1);
  at("layer0.b1") = Eigen::MatrixXd::Zero(1, 1);
  at("layer0.w2") = Eigen::MatrixXd::Ones(1, 1);
  at("layer0.b2") = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd head_w(1, 2);
  head_w << -1.0, 1.0;
  at("head.w") = head_w;
  Eigen::MatrixXd head_b(1, 2);
  head_b << 1.0, 0.0;
  at("head.b") = head_b;
  model.set_parameters(std::move(params));
  return model;
}

GraphDataset single_node_graphs(const std::vector<double>& features) {
  GraphDataset ds;
  ds.name = "probe";
  ds.class_count = 2;
  for (double x : features) {
    Graph g;
    g.node_count = 1;
    g.node_features = Eigen::MatrixXd::Constant(1, 1, x);
    g.graph_label = 0;
    ds.graphs.push_back(std::move(g));
  }
  return ds;
}

AttackReport sample_report() {
  AttackReport r;
  r.dataset = "mset";
  r.model = "gin";
  r.config.strategy = SelectionStrategy::Rsa;
  r.config.gamma = 0.2;
  r.seed = 7;
  r.asr = 0.5;
  r.cad = 0.25;
  r.clean_accuracy_original = 0.75;
  r.clean_accuracy_backdoored = 0.5;
  r.skipped_items = 3;
  r.fallback_items = 1;
  r.runtimes.train_clean = 1.0;
  r.runtimes.explain = 0.25;
  r.runtimes.poison = 0.25;
  r.trigger_text = "kind subgraph\nnodes 2\n";
  return r;
}

}  // namespace

TEST_CASE("graph success rate counts target-class predictions exactly") {
  GnnModel model = threshold_model();
  GraphDataset four_of_five = single_node_graphs({0.9, 0.9, 0.9, 0.9, 0.1});
  CHECK(attack_success_rate(model, four_of_five, 1) == 0.8);
  // Complement against the other class.
  CHECK(attack_success_rate(model, four_of_five, 0) == doctest::Approx(0.2));

  GraphDataset all_hit = single_node_graphs({0.7, 0.8, 0.99});
  CHECK(attack_success_rate(model, all_hit, 1) == 1.0);
  GraphDataset none_hit = single_node_graphs({0.1, 0.2});
  CHECK(attack_success_rate(model, none_hit, 1) == 0.0);
}

TEST_CASE("graph success rate validates its inputs") {
  GnnModel model = threshold_model();
  GraphDataset empty;
  empty.class_count = 2;
  CHECK_THROWS_AS(attack_success_rate(model, empty, 1), EvaluationImpossibleError);
  GraphDataset one = single_node_graphs({0.9});
  CHECK_THROWS_AS(attack_success_rate(model, one, 2), ArgumentError);
  CHECK_THROWS_AS(attack_success_rate(model, one, -1), ArgumentError);
}

TEST_CASE("graph success rate agrees with a per-graph recount") {
  GraphDataset ds = testsupport::make_motif_dataset(18, 40);
  ModelConfig cfg = default_graph_config(Architecture::Gin);
  cfg.layer_count = 2;
  cfg.hidden_dim = 6;
  cfg.seed = 19;
  GnnModel model(cfg, TaskKind::GraphClassification, 1, 2);  // untrained is fine

  for (int target = 0; target < 2; ++target) {
    int hits = 0;
    for (const Graph& g : ds.graphs) {
      if (model.predicted_graph_label(g) == target) ++hits;
    }
    CHECK(attack_success_rate(model, ds, target) ==
          doctest::Approx(hits / 18.0).epsilon(1e-12));
  }
}

TEST_CASE("node success rate scores exact single-node substitutions") {
  const int d = 5, informative = 2;
  NodeTaskDataset ds = testsupport::make_feature_dataset(30, d, informative, 55);
  GnnModel probe = testsupport::make_feature_probe_model(d, informative);

  std::vector<NodeEvalCase> cases;
  for (int v = 0; v < 8; ++v) {
    NodeEvalCase c;
    c.node = v;
    c.features = ds.graph.node_features.row(v);
    // Six of eight get the informative feature pushed over the threshold.
    c.features(informative) = (v < 6) ? 0.9 : 0.1;
    cases.push_back(std::move(c));
  }
  CHECK(attack_success_rate(probe, ds.graph, cases, 1) == 0.75);
  CHECK(attack_success_rate(probe, ds.graph, cases, 0) == 0.25);

  CHECK_THROWS_AS(attack_success_rate(probe, ds.graph, {}, 1),
                  EvaluationImpossibleError);
  CHECK_THROWS_AS(attack_success_rate(probe, ds.graph, cases, 7), ArgumentError);
}

TEST_CASE("accuracy drop is zero for identical models and signed otherwise") {
  GraphDataset ds = testsupport::make_motif_dataset(14, 61);
  ModelConfig cfg = default_graph_config(Architecture::Gin);
  cfg.layer_count = 2;
  cfg.hidden_dim = 6;
  cfg.seed = 3;
  GnnModel a(cfg, TaskKind::GraphClassification, 1, 2);
  CHECK(clean_accuracy_drop(a, a, ds) == 0.0);

  cfg.seed = 4;
  GnnModel b(cfg, TaskKind::GraphClassification, 1, 2);
  std::vector<int> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  double expected = a.accuracy(ds, all) - b.accuracy(ds, all);
  CHECK(clean_accuracy_drop(a, b, ds) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(clean_accuracy_drop(b, a, ds) == doctest::Approx(-expected).epsilon(1e-15));

  GraphDataset empty;
  CHECK_THROWS_AS(clean_accuracy_drop(a, b, empty), EvaluationImpossibleError);
}

TEST_CASE("accuracy matches a manual argmax recount") {
  GraphDataset ds = testsupport::make_motif_dataset(12, 77);
  ModelConfig cfg = default_graph_config(Architecture::GraphSage);
  cfg.layer_count = 2;
  cfg.hidden_dim = 4;
  cfg.seed = 9;
  GnnModel model(cfg, TaskKind::GraphClassification, 1, 2);

  std::vector<int> all(ds.size());
  std::iota(all.begin(), all.end(), 0);
  int correct = 0;
  for (const Graph& g : ds.graphs) {
    if (model.predicted_graph_label(g) == *g.graph_label) ++correct;
  }
  CHECK(model.accuracy(ds, all) == doctest::Approx(correct / 12.0).epsilon(1e-12));
}

TEST_CASE("node-task accuracy drop evaluates on the test mask") {
  const int d = 4, informative = 1;
  NodeTaskDataset base = testsupport::make_feature_dataset(40, d, informative, 21);
  NodeTaskDataset ds = split_node_dataset(base, 0.5, 5);
  GnnModel probe = testsupport::make_feature_probe_model(d, informative);

  // The probe is exact, so against itself the drop is zero.
  CHECK(clean_accuracy_drop(probe, ds, probe, ds) == 0.0);
  CHECK(probe.accuracy(ds, ds.test_mask) == 1.0);

  // Breaking the deployed copy's informative column costs accuracy.
  NodeTaskDataset broken = ds;
  broken.graph.node_features.col(informative).setConstant(0.9);
  double drop = clean_accuracy_drop(probe, ds, probe, broken);
  double direct = 1.0 - probe.accuracy(broken, broken.test_mask);
  CHECK(drop == doctest::Approx(direct).epsilon(1e-15));
  CHECK(drop > 0.0);

  NodeTaskDataset no_test = ds;
  std::fill(no_test.test_mask.begin(), no_test.test_mask.end(), 0);
  CHECK_THROWS_AS(clean_accuracy_drop(probe, no_test, probe, no_test),
                  EvaluationImpossibleError);
}

TEST_CASE("report JSON round-trips every field") {
  AttackReport r = sample_report();
  nlohmann::json j = nlohmann::json::parse(report_to_json(r));
  CHECK(j["dataset"] == "mset");
  CHECK(j["model"] == "gin");
  CHECK(j["seed"] == 7);
  CHECK(j["config"]["strategy"] == "rsa");
  CHECK(j["config"]["task"] == "graph");
  CHECK(j["config"]["gamma"] == 0.2);
  CHECK(j["asr"] == 0.5);
  CHECK(j["cad"] == 0.25);
  CHECK(j["clean_accuracy_original"] == 0.75);
  CHECK(j["clean_accuracy_backdoored"] == 0.5);
  CHECK(j["skipped_items"] == 3);
  CHECK(j["fallback_items"] == 1);
  CHECK(j["runtimes"]["train_clean"] == 1.0);
  CHECK(j["runtimes"]["total"] == 1.5);
  CHECK(j["trigger"] == "kind subgraph\nnodes 2\n");
}

TEST_CASE("csv header and row layout are stable") {
  CHECK(report_csv_header() ==
        "dataset,model,strategy,gamma,seed,asr,cad,clean_acc_orig,clean_acc_backdoor,"
        "runtime_s");
  CHECK(report_csv_row(sample_report()) == "mset,gin,rsa,0.2,7,0.5,0.25,0.75,0.5,1.5");
}

TEST_CASE("float formatting is shortest-round-trip") {
  CHECK(format_double(0.2) == "0.2");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.0) == "0");
  for (double x : {1.0 / 3.0, 0.1 + 0.2, 1e-9, 12345.678, 98.24}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}
