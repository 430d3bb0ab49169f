#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "graphbd/graph.hpp"
#include "graphbd/model.hpp"
#include "graphbd/poison.hpp"

namespace graphbd {

struct PhaseRuntimes {
  double train_clean = 0.0;
  double explain = 0.0;
  double poison = 0.0;
  double train_backdoor = 0.0;
  double evaluate = 0.0;

  double total() const {
    return train_clean + explain + poison + train_backdoor + evaluate;
  }
};

struct AttackReport {
  std::string dataset;
  std::string model;
  AttackConfig config;
  std::uint64_t seed = 0;  // the seed this repetition actually ran with
  double asr = 0.0;
  double cad = 0.0;
  double clean_accuracy_original = 0.0;
  double clean_accuracy_backdoored = 0.0;
  int skipped_items = 0;
  int fallback_items = 0;
  PhaseRuntimes runtimes;
  std::string trigger_text;
};

// Fraction of trigger-embedded graphs the model classifies as the target
// class. The set must stem from non-target originals.
double attack_success_rate(const GnnModel& model, const GraphDataset& backdoored_test,
                           int target_class);

// One node-task evaluation case: this node's feature row with its trigger.
struct NodeEvalCase {
  int node = -1;
  Eigen::RowVectorXd features;
};

// Fraction of cases whose exact per-node prediction (only that node's
// features replaced) lands on the target class.
double attack_success_rate(const GnnModel& model, const Graph& graph,
                           const std::vector<NodeEvalCase>& cases, int target_class);

// accuracy(original) - accuracy(backdoored) on the same clean split; signed.
double clean_accuracy_drop(const GnnModel& model_o, const GnnModel& model_b,
                           const GraphDataset& clean_test);
double clean_accuracy_drop(const GnnModel& model_o, const NodeTaskDataset& clean_data,
                           const GnnModel& model_b, const NodeTaskDataset& deployed_data);

std::string report_to_json(const AttackReport& report);

// Flat row: dataset,model,strategy,gamma,seed,asr,cad,clean_acc_orig,
// clean_acc_backdoor,runtime_s. Numbers print deterministically.
std::string report_csv_header();
std::string report_csv_row(const AttackReport& report);

// Deterministic shortest-round-trip float formatting shared by all reports.
std::string format_double(double value);

}  // namespace graphbd
