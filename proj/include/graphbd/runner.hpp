#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "graphbd/explain.hpp"
#include "graphbd/graph.hpp"
#include "graphbd/metrics.hpp"
#include "graphbd/model.hpp"
#include "graphbd/poison.hpp"

namespace graphbd {

// Everything one attack experiment needs. The model seed and the explainer
// seed are ignored: each repetition runs with attack.seed + repetition index
// threaded through every stochastic stage.
struct ExperimentSpec {
  std::string dataset_name;
  std::filesystem::path dataset_dir;
  ModelConfig model;
  AttackConfig attack;
  ExplainerConfig explainer;
  int repetitions = 3;
  std::filesystem::path out_dir;     // empty: compute only, write nothing
  double train_fraction = 2.0 / 3;   // graph task train/test split
  double node_train_fraction = 0.2;  // node task train mask fraction
  bool write_checkpoints = true;
};

struct RunSummary {
  std::vector<AttackReport> reports;  // one per repetition, in order
  // Numeric fields averaged over repetitions, skip/fallback counts summed,
  // seed and trigger text taken from the spec rather than any repetition.
  AttackReport mean;
};

// Full graph-task pipeline, repeated spec.repetitions times: split, train the
// clean model, poison the training set, retrain from scratch, evaluate
// success rate and accuracy drop. Writes per-repetition artifacts plus
// runs.csv / summary.json / stats.csv under spec.out_dir. Failures escape as
// PhaseError wrapping the underlying error.
RunSummary run_graph_attack(const ExperimentSpec& spec);
RunSummary run_graph_attack(const ExperimentSpec& spec, const GraphDataset& data);

// Node-task counterpart. Evaluation embeds a per-node feature trigger into
// every test node whose true label differs from the target and checks the
// exact single-node prediction on the deployed (poisoned) graph.
RunSummary run_node_attack(const ExperimentSpec& spec);
RunSummary run_node_attack(const ExperimentSpec& spec, const NodeTaskDataset& data);

struct SweepCell {
  double gamma = 0.0;
  SelectionStrategy strategy = SelectionStrategy::Rsa;
  bool failed = false;
  std::string error;   // first PhaseError message when failed
  RunSummary summary;  // valid when !failed
};

// Graph-task grid over trigger-size fractions x all three selection
// strategies. A failing cell is recorded (and written to failures.csv) and
// the sweep moves on. Successful repetitions land in sweep.csv long format:
// gamma,strategy,seed,asr,cad.
std::vector<SweepCell> sweep_gamma(const ExperimentSpec& spec,
                                   const std::vector<double>& gammas);
std::vector<SweepCell> sweep_gamma(const ExperimentSpec& spec,
                                   const std::vector<double>& gammas,
                                   const GraphDataset& data);

}  // namespace graphbd
