// Command-line front end: dataset statistics, single attack experiments for
// both tasks, trigger-size sweeps, and aggregate tables over finished runs.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "graphbd/dataset_io.hpp"
#include "graphbd/error.hpp"
#include "graphbd/metrics.hpp"
#include "graphbd/model.hpp"
#include "graphbd/runner.hpp"
#include "graphbd/statistics.hpp"
#include "graphbd/tables.hpp"

namespace {

namespace fs = std::filesystem;
using namespace graphbd;

std::string default_data_dir() {
  const char* env = std::getenv("GRAPHBD_DATA_DIR");
  return (env != nullptr && *env != '\0') ? env : "./data";
}

// Exit codes: 0 success, 2 bad arguments or config, 3 dataset loading or
// splitting, 4 training, 5 explanation, 6 poisoning, 7 evaluation, 8 file io.
int exit_code(const PhaseError& e) {
  switch (e.phase) {
    case Phase::Config:
      return 2;
    case Phase::Load:
    case Phase::Split:
      return 3;
    case Phase::TrainClean:
    case Phase::TrainBackdoor:
      return 4;
    case Phase::Explain:
      return 5;
    case Phase::Poison:
      return 6;
    case Phase::Evaluate:
      return 7;
    case Phase::Io:
      return 8;
  }
  return 8;
}

// Raw option values; only the ones the user actually passed are applied over
// the per-architecture defaults.
struct AttackCli {
  std::string dataset;
  std::string data_dir = default_data_dir();
  std::string model;
  std::string strategy = "rsa";
  std::string readout;
  int layers = 0, hidden = 0, heads = 0, epochs = 0, batch_size = 0;
  double learning_rate = 0.0, dropout = 0.0, weight_decay = 0.0;
  int target = 0;
  double gamma = 0.2, rho = 0.8, eta = 0.05;
  double poison_fraction = 0.15, feature_fraction = 0.1, fill = 1.0;
  std::uint64_t seed = 0;
  int reps = 3;
  std::string out;
  double train_fraction = 2.0 / 3, node_train_fraction = 0.2;
  bool no_checkpoints = false;
  int explain_iters = 0, hops = 0, max_samples = 0;
  double explain_lr = 0.0, size_weight = 0.0, entropy_weight = 0.0, hsic_lambda = 0.0;

  CLI::Option *o_readout = nullptr, *o_layers = nullptr, *o_hidden = nullptr,
              *o_heads = nullptr, *o_epochs = nullptr, *o_batch = nullptr,
              *o_lr = nullptr, *o_dropout = nullptr, *o_wd = nullptr,
              *o_explain_iters = nullptr, *o_explain_lr = nullptr, *o_size_w = nullptr,
              *o_entropy_w = nullptr, *o_hops = nullptr, *o_max_samples = nullptr,
              *o_hsic_lambda = nullptr;
};

void add_attack_options(CLI::App* sub, AttackCli& c, TaskKind task, bool scalar_gamma) {
  sub->add_option("--dataset", c.dataset, "dataset name (directory under --data-dir)")
      ->required();
  sub->add_option("--data-dir", c.data_dir,
                  "datasets root (default $GRAPHBD_DATA_DIR or ./data)");
  sub->add_option("--model", c.model, "gin, sage or gat");
  sub->add_option("--strategy", c.strategy, "rsa, mia or lia");
  sub->add_option("--target", c.target, "target class of the attack");
  sub->add_option("--seed", c.seed, "base seed; repetition r runs with seed+r");
  sub->add_option("--reps", c.reps, "repetitions per configuration");
  sub->add_option("--out", c.out, "output directory (omit to skip writing files)");
  c.o_layers = sub->add_option("--layers", c.layers, "message-passing rounds");
  c.o_hidden = sub->add_option("--hidden", c.hidden, "hidden width");
  c.o_epochs = sub->add_option("--epochs", c.epochs, "training epochs");
  c.o_lr = sub->add_option("--lr", c.learning_rate, "learning rate");
  c.o_dropout = sub->add_option("--dropout", c.dropout, "dropout probability");
  c.o_wd = sub->add_option("--weight-decay", c.weight_decay, "L2 penalty");
  c.o_explain_iters =
      sub->add_option("--explain-iters", c.explain_iters, "edge-mask optimization steps");
  c.o_explain_lr = sub->add_option("--explain-lr", c.explain_lr, "edge-mask step size");
  c.o_size_w = sub->add_option("--mask-size-weight", c.size_weight,
                               "edge-mask sparsity penalty");
  c.o_entropy_w = sub->add_option("--mask-entropy-weight", c.entropy_weight,
                                  "edge-mask entropy penalty");
  sub->add_flag("--no-checkpoints", c.no_checkpoints, "skip model checkpoint files");
  if (task == TaskKind::GraphClassification) {
    if (scalar_gamma) {
      sub->add_option("--gamma", c.gamma,
                      "trigger size as a fraction of average graph size");
    }
    sub->add_option("--rho", c.rho, "trigger edge density");
    sub->add_option("--eta", c.eta, "fraction of training graphs poisoned");
    sub->add_option("--train-fraction", c.train_fraction, "train split fraction");
    c.o_batch = sub->add_option("--batch-size", c.batch_size, "graphs per training step");
    c.o_readout = sub->add_option("--readout", c.readout, "sum or mean");
  } else {
    sub->add_option("--poison-fraction", c.poison_fraction,
                    "fraction of training nodes poisoned");
    sub->add_option("--feature-fraction", c.feature_fraction,
                    "fraction of feature dims in the trigger");
    sub->add_option("--fill", c.fill, "trigger fill value");
    sub->add_option("--train-fraction", c.node_train_fraction, "train mask fraction");
    c.o_heads = sub->add_option("--heads", c.heads, "attention heads");
    c.o_hops = sub->add_option("--hops", c.hops, "explanation neighborhood radius");
    c.o_max_samples =
        sub->add_option("--max-samples", c.max_samples, "explanation sample cap");
    c.o_hsic_lambda =
        sub->add_option("--hsic-lambda", c.hsic_lambda, "feature-selection L1 weight");
  }
  sub->set_config("--config", "", "read options from an INI file (flags win)");
}

ExperimentSpec make_spec(const AttackCli& c, TaskKind task) {
  const std::string model_name =
      !c.model.empty() ? c.model
                       : (task == TaskKind::GraphClassification ? "gin" : "gat");
  const Architecture arch = architecture_from_string(model_name);
  ModelConfig mc = task == TaskKind::GraphClassification ? default_graph_config(arch)
                                                         : default_node_config(arch);
  if (c.o_layers->count()) mc.layer_count = c.layers;
  if (c.o_hidden->count()) mc.hidden_dim = c.hidden;
  if (c.o_heads && c.o_heads->count()) mc.attention_heads = c.heads;
  if (c.o_readout && c.o_readout->count()) mc.readout = readout_from_string(c.readout);
  if (c.o_epochs->count()) mc.epochs = c.epochs;
  if (c.o_lr->count()) mc.learning_rate = c.learning_rate;
  if (c.o_dropout->count()) mc.dropout = c.dropout;
  if (c.o_wd->count()) mc.weight_decay = c.weight_decay;
  if (c.o_batch && c.o_batch->count()) mc.batch_size = c.batch_size;

  AttackConfig atk;
  atk.task = task;
  atk.strategy = strategy_from_string(c.strategy);
  atk.target_class = c.target;
  atk.gamma = c.gamma;
  atk.rho = c.rho;
  atk.eta = c.eta;
  atk.poison_fraction = c.poison_fraction;
  atk.feature_fraction = c.feature_fraction;
  atk.fill_value = c.fill;
  atk.seed = c.seed;

  ExplainerConfig ex;
  if (c.o_explain_iters->count()) ex.iterations = c.explain_iters;
  if (c.o_explain_lr->count()) ex.step_size = c.explain_lr;
  if (c.o_size_w->count()) ex.mask_size_weight = c.size_weight;
  if (c.o_entropy_w->count()) ex.mask_entropy_weight = c.entropy_weight;
  if (c.o_hops && c.o_hops->count()) ex.hop_count = c.hops;
  if (c.o_max_samples && c.o_max_samples->count()) ex.max_samples = c.max_samples;
  if (c.o_hsic_lambda && c.o_hsic_lambda->count()) ex.hsic_lambda = c.hsic_lambda;

  ExperimentSpec spec;
  spec.dataset_name = c.dataset;
  spec.dataset_dir = fs::path(c.data_dir) / c.dataset;
  spec.model = mc;
  spec.attack = atk;
  spec.explainer = ex;
  spec.repetitions = c.reps;
  spec.out_dir = c.out;
  spec.train_fraction = c.train_fraction;
  spec.node_train_fraction = c.node_train_fraction;
  spec.write_checkpoints = !c.no_checkpoints;
  return spec;
}

void print_summary(const RunSummary& summary, const std::string& out) {
  for (size_t i = 0; i < summary.reports.size(); ++i) {
    const AttackReport& r = summary.reports[i];
    std::cout << "rep " << i << ": seed=" << r.seed << " asr=" << format_double(r.asr)
              << " cad=" << format_double(r.cad)
              << " clean_acc=" << format_double(r.clean_accuracy_backdoored) << "\n";
  }
  const AttackReport& m = summary.mean;
  std::cout << "mean: asr=" << format_double(m.asr) << " cad=" << format_double(m.cad)
            << " clean_acc_orig=" << format_double(m.clean_accuracy_original)
            << " clean_acc_backdoor=" << format_double(m.clean_accuracy_backdoored)
            << " skipped=" << m.skipped_items << " fallbacks=" << m.fallback_items
            << "\n";
  if (!out.empty()) std::cout << "outputs: " << out << "\n";
}

int run_stats(const std::string& dataset, const std::string& data_dir) {
  const fs::path dir = fs::path(data_dir) / dataset;
  if (fs::exists(dir / (dataset + "_A.txt"))) {
    const GraphDataset data = load_tu_dataset(dir, dataset);
    std::cout << statistics_csv(data.name, dataset_statistics(data));
  } else if (fs::exists(dir / (dataset + ".content"))) {
    const NodeTaskDataset data = load_citation_dataset(dir, dataset);
    std::cout << statistics_csv(data.name, dataset_statistics(data));
  } else {
    throw IngestionError("no " + dataset + "_A.txt or " + dataset + ".content under " +
                         dir.string());
  }
  return 0;
}

struct CliState {
  AttackCli graph, node, sweep;
  std::vector<double> gammas;
  std::string stats_dataset;
  std::string stats_dir = default_data_dir();
  std::string tables_dir = ".";
  CLI::App *cmd_stats = nullptr, *cmd_graph = nullptr, *cmd_node = nullptr,
           *cmd_sweep = nullptr, *cmd_tables = nullptr;
};

void build_cli(CLI::App& app, CliState& s) {
  app.set_version_flag("--version", "graphbd 0.1.0");
  app.require_subcommand(1);

  s.cmd_stats = app.add_subcommand("stats", "print dataset statistics as CSV");
  s.cmd_stats->add_option("--dataset", s.stats_dataset, "dataset name")->required();
  s.cmd_stats->add_option("--data-dir", s.stats_dir,
                          "datasets root (default $GRAPHBD_DATA_DIR or ./data)");

  s.cmd_graph = app.add_subcommand("attack-graph",
                                   "subgraph-trigger attack on graph classification");
  add_attack_options(s.cmd_graph, s.graph, TaskKind::GraphClassification, true);

  s.cmd_node = app.add_subcommand("attack-node",
                                  "feature-trigger attack on node classification");
  add_attack_options(s.cmd_node, s.node, TaskKind::NodeClassification, true);

  s.cmd_sweep =
      app.add_subcommand("sweep", "attack-graph over a list of trigger-size fractions");
  add_attack_options(s.cmd_sweep, s.sweep, TaskKind::GraphClassification, false);
  s.cmd_sweep
      ->add_option("--gamma", s.gammas, "comma-separated trigger-size fractions")
      ->delimiter(',');

  s.cmd_tables = app.add_subcommand("tables", "aggregate finished runs into tables");
  s.cmd_tables->add_option("run_dir", s.tables_dir, "directory holding run outputs");
}

int dispatch(CliState& s) {
  if (s.cmd_stats->parsed()) return run_stats(s.stats_dataset, s.stats_dir);
  if (s.cmd_graph->parsed()) {
    print_summary(run_graph_attack(make_spec(s.graph, TaskKind::GraphClassification)),
                  s.graph.out);
    return 0;
  }
  if (s.cmd_node->parsed()) {
    print_summary(run_node_attack(make_spec(s.node, TaskKind::NodeClassification)),
                  s.node.out);
    return 0;
  }
  if (s.cmd_sweep->parsed()) {
    ExperimentSpec spec = make_spec(s.sweep, TaskKind::GraphClassification);
    std::vector<double> gammas = s.gammas;
    if (gammas.empty()) gammas.push_back(spec.attack.gamma);
    int ok = 0;
    for (const SweepCell& cell : sweep_gamma(spec, gammas)) {
      std::cout << "gamma=" << format_double(cell.gamma)
                << " strategy=" << to_string(cell.strategy) << ": ";
      if (cell.failed) {
        std::cout << "FAILED: " << cell.error << "\n";
      } else {
        ++ok;
        std::cout << "asr=" << format_double(cell.summary.mean.asr)
                  << " cad=" << format_double(cell.summary.mean.cad) << "\n";
      }
    }
    if (!s.sweep.out.empty()) std::cout << "outputs: " << s.sweep.out << "\n";
    return ok > 0 ? 0 : 1;
  }
  if (s.cmd_tables->parsed()) {
    for (const fs::path& p : emit_tables(s.tables_dir)) std::cout << p.string() << "\n";
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"explainability-guided backdoor attacks on graph neural networks"};
  CliState state;
  try {
    build_cli(app, state);
    app.parse(argc, argv);
    return dispatch(state);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // help and version exit cleanly
  } catch (const PhaseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ExplainerDivergedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const PoisoningFailedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 6;
  } catch (const EvaluationImpossibleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 7;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const MalformedDatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const DegenerateInputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 8;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 8;
  }
}
