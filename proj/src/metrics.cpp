#include "graphbd/metrics.hpp"

#include <charconv>
#include <numeric>

#include <nlohmann/json.hpp>

#include "graphbd/error.hpp"

namespace graphbd {

namespace {

using nlohmann::json;

int argmax_row(const Eigen::MatrixXd& probs, Eigen::Index row) {
  Eigen::Index best = 0;
  probs.row(row).maxCoeff(&best);  // ties resolve to the lowest class index
  return static_cast<int>(best);
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

double attack_success_rate(const GnnModel& model, const GraphDataset& backdoored_test,
                           int target_class) {
  if (backdoored_test.size() == 0) {
    throw EvaluationImpossibleError("attack_success_rate: empty evaluation set");
  }
  if (target_class < 0 || target_class >= model.class_count()) {
    throw ArgumentError("attack_success_rate: target class out of range");
  }
  std::vector<int> all(backdoored_test.size());
  std::iota(all.begin(), all.end(), 0);
  Eigen::MatrixXd probs = model.predict_graphs(backdoored_test, all);
  int hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (argmax_row(probs, i) == target_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(backdoored_test.size());
}

double attack_success_rate(const GnnModel& model, const Graph& graph,
                           const std::vector<NodeEvalCase>& cases, int target_class) {
  if (cases.empty()) {
    throw EvaluationImpossibleError("attack_success_rate: empty evaluation set");
  }
  if (target_class < 0 || target_class >= model.class_count()) {
    throw ArgumentError("attack_success_rate: target class out of range");
  }
  int hits = 0;
  for (const NodeEvalCase& c : cases) {
    Eigen::VectorXd probs = predict_node_exact(model, graph, c.node, {{c.node, c.features}});
    Eigen::Index best = 0;
    probs.maxCoeff(&best);
    if (static_cast<int>(best) == target_class) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(cases.size());
}

double clean_accuracy_drop(const GnnModel& model_o, const GnnModel& model_b,
                           const GraphDataset& clean_test) {
  if (clean_test.size() == 0) {
    throw EvaluationImpossibleError("clean_accuracy_drop: empty test split");
  }
  std::vector<int> all(clean_test.size());
  std::iota(all.begin(), all.end(), 0);
  return model_o.accuracy(clean_test, all) - model_b.accuracy(clean_test, all);
}

double clean_accuracy_drop(const GnnModel& model_o, const NodeTaskDataset& clean_data,
                           const GnnModel& model_b, const NodeTaskDataset& deployed_data) {
  bool any = false;
  for (char m : clean_data.test_mask) any = any || m;
  if (!any) throw EvaluationImpossibleError("clean_accuracy_drop: empty test split");
  return model_o.accuracy(clean_data, clean_data.test_mask) -
         model_b.accuracy(deployed_data, deployed_data.test_mask);
}

std::string report_to_json(const AttackReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["model"] = r.model;
  j["seed"] = r.seed;
  j["config"] = {{"task", to_string(r.config.task)},
                 {"strategy", to_string(r.config.strategy)},
                 {"target_class", r.config.target_class},
                 {"gamma", r.config.gamma},
                 {"rho", r.config.rho},
                 {"eta", r.config.eta},
                 {"poison_fraction", r.config.poison_fraction},
                 {"feature_fraction", r.config.feature_fraction},
                 {"fill_value", r.config.fill_value},
                 {"seed", r.config.seed}};
  j["asr"] = r.asr;
  j["cad"] = r.cad;
  j["clean_accuracy_original"] = r.clean_accuracy_original;
  j["clean_accuracy_backdoored"] = r.clean_accuracy_backdoored;
  j["skipped_items"] = r.skipped_items;
  j["fallback_items"] = r.fallback_items;
  j["runtimes"] = {{"train_clean", r.runtimes.train_clean},
                   {"explain", r.runtimes.explain},
                   {"poison", r.runtimes.poison},
                   {"train_backdoor", r.runtimes.train_backdoor},
                   {"evaluate", r.runtimes.evaluate},
                   {"total", r.runtimes.total()}};
  j["trigger"] = r.trigger_text;
  return j.dump(2);
}

std::string report_csv_header() {
  return "dataset,model,strategy,gamma,seed,asr,cad,clean_acc_orig,clean_acc_backdoor,"
         "runtime_s";
}

std::string report_csv_row(const AttackReport& r) {
  std::string row;
  row += r.dataset;
  row += ',';
  row += r.model;
  row += ',';
  row += to_string(r.config.strategy);
  row += ',';
  row += format_double(r.config.gamma);
  row += ',';
  row += std::to_string(r.seed);
  row += ',';
  row += format_double(r.asr);
  row += ',';
  row += format_double(r.cad);
  row += ',';
  row += format_double(r.clean_accuracy_original);
  row += ',';
  row += format_double(r.clean_accuracy_backdoored);
  row += ',';
  row += format_double(r.runtimes.total());
  return row;
}

}  // namespace graphbd
