#include "graphbd/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <utility>

#include <nlohmann/json.hpp>

#include "graphbd/checkpoint.hpp"
#include "graphbd/dataset_io.hpp"
#include "graphbd/error.hpp"
#include "graphbd/explain_hsic.hpp"
#include "graphbd/splits.hpp"
#include "graphbd/statistics.hpp"
#include "graphbd/train.hpp"
#include "graphbd/trigger.hpp"

namespace graphbd {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Tags an escaping error with the pipeline stage; already-tagged errors pass
// through so the outermost stage does not shadow the real one.
template <typename F>
decltype(auto) run_phase(Phase phase, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const PhaseError&) {
    throw;
  } catch (const Error& e) {
    throw PhaseError(phase, e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PhaseError(Phase::Io, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw PhaseError(Phase::Io, "write failed for " + path.string());
}

void make_dirs(const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) {
    throw PhaseError(Phase::Io,
                     "cannot create directory " + path.string() + ": " + ec.message());
  }
}

void validate_spec(const ExperimentSpec& spec, TaskKind expected, int class_count) {
  if (spec.repetitions < 1) {
    throw ArgumentError("repetitions must be at least 1, got " +
                        std::to_string(spec.repetitions));
  }
  if (spec.attack.task != expected) {
    throw ArgumentError(std::string("attack task is ") + to_string(spec.attack.task) +
                        " but the runner handles " + to_string(expected));
  }
  const double frac = expected == TaskKind::GraphClassification ? spec.train_fraction
                                                                : spec.node_train_fraction;
  if (!(frac > 0.0 && frac < 1.0)) {
    throw ArgumentError("train fraction must lie in (0, 1)");
  }
  validate_config(spec.model);
  validate_attack_config(spec.attack, class_count);
  validate_explainer_config(spec.explainer);
}

// Per-repetition configs: one seed drives the split, both trainings and every
// poisoning stream of that repetition.
struct RepConfigs {
  std::uint64_t seed;
  ModelConfig model;
  AttackConfig attack;
  ExplainerConfig explainer;
};

RepConfigs rep_configs(const ExperimentSpec& spec, int rep) {
  RepConfigs c{spec.attack.seed + static_cast<std::uint64_t>(rep), spec.model, spec.attack,
               spec.explainer};
  c.model.seed = c.seed;
  c.attack.seed = c.seed;
  c.explainer.seed = c.seed;
  return c;
}

AttackReport mean_report(const std::vector<AttackReport>& reports,
                         const ExperimentSpec& spec) {
  AttackReport mean = reports.front();
  mean.seed = spec.attack.seed;
  mean.config.seed = spec.attack.seed;
  mean.trigger_text.clear();  // repetitions carry different triggers
  mean.asr = mean.cad = mean.clean_accuracy_original = mean.clean_accuracy_backdoored = 0.0;
  mean.skipped_items = mean.fallback_items = 0;
  mean.runtimes = {};
  for (const AttackReport& r : reports) {
    mean.asr += r.asr;
    mean.cad += r.cad;
    mean.clean_accuracy_original += r.clean_accuracy_original;
    mean.clean_accuracy_backdoored += r.clean_accuracy_backdoored;
    mean.skipped_items += r.skipped_items;
    mean.fallback_items += r.fallback_items;
    mean.runtimes.train_clean += r.runtimes.train_clean;
    mean.runtimes.explain += r.runtimes.explain;
    mean.runtimes.poison += r.runtimes.poison;
    mean.runtimes.train_backdoor += r.runtimes.train_backdoor;
    mean.runtimes.evaluate += r.runtimes.evaluate;
  }
  const double n = static_cast<double>(reports.size());
  mean.asr /= n;
  mean.cad /= n;
  mean.clean_accuracy_original /= n;
  mean.clean_accuracy_backdoored /= n;
  mean.runtimes.train_clean /= n;
  mean.runtimes.explain /= n;
  mean.runtimes.poison /= n;
  mean.runtimes.train_backdoor /= n;
  mean.runtimes.evaluate /= n;
  return mean;
}

std::string runs_csv(const std::vector<AttackReport>& reports) {
  std::string text = report_csv_header() + "\n";
  for (const AttackReport& r : reports) text += report_csv_row(r) + "\n";
  return text;
}

std::string summary_json(const RunSummary& summary, const std::string& dataset,
                         const std::string& model) {
  json j;
  j["format"] = "graphbd.summary";
  j["version"] = 1;
  j["dataset"] = dataset;
  j["model"] = model;
  j["repetitions"] = summary.reports.size();
  j["mean"] = json::parse(report_to_json(summary.mean));
  json runs = json::array();
  for (const AttackReport& r : summary.reports) runs.push_back(json::parse(report_to_json(r)));
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

// Text artifacts of one repetition, written next to its report.
struct RepArtifacts {
  std::string train_manifest;
  std::string test_manifest;
  std::string trigger_text;
};

void write_rep_dir(const ExperimentSpec& spec, int rep, const AttackReport& report,
                   const RepArtifacts& artifacts, const GnnModel& model_o,
                   const GnnModel& model_b) {
  const fs::path dir = spec.out_dir / ("rep_" + std::to_string(rep));
  make_dirs(dir);
  write_text_file(dir / "report.json", report_to_json(report));
  write_text_file(dir / "manifest.txt", artifacts.train_manifest);
  write_text_file(dir / "test_manifest.txt", artifacts.test_manifest);
  write_text_file(dir / "trigger.txt", artifacts.trigger_text);
  if (spec.write_checkpoints) {
    run_phase(Phase::Io, [&] {
      save_checkpoint(model_o, dir / "checkpoint_original.json");
      save_checkpoint(model_b, dir / "checkpoint_backdoored.json");
    });
  }
}

AttackReport run_graph_rep(const ExperimentSpec& spec, const GraphDataset& data,
                           const std::string& name, double avg_nodes, int rep,
                           RepArtifacts& artifacts, std::optional<GnnModel>& model_o_out,
                           std::optional<GnnModel>& model_b_out) {
  const RepConfigs cfg = rep_configs(spec, rep);
  auto [train_set, test_set] = run_phase(Phase::Split, [&] {
    return split_graph_dataset(data, spec.train_fraction, cfg.seed);
  });

  PhaseRuntimes runtimes;
  GnnModel model_o(cfg.model, TaskKind::GraphClassification, data.feature_dim(),
                   data.class_count);
  auto start = std::chrono::steady_clock::now();
  run_phase(Phase::TrainClean, [&] { train(model_o, train_set); });
  runtimes.train_clean = seconds_since(start);

  TriggerGraph trigger;
  GraphPoisonResult poison;
  start = std::chrono::steady_clock::now();
  run_phase(Phase::Poison, [&] {
    const int t = trigger_size_from_gamma(avg_nodes, cfg.attack.gamma);
    trigger = generate_er_trigger(t, cfg.attack.rho, cfg.seed);
    poison = poison_graph_training_set(train_set, model_o, cfg.attack, trigger,
                                       cfg.explainer);
  });
  runtimes.poison = seconds_since(start) - poison.explain_seconds;
  runtimes.explain += poison.explain_seconds;

  GnnModel model_b(cfg.model, TaskKind::GraphClassification, data.feature_dim(),
                   data.class_count);
  start = std::chrono::steady_clock::now();
  run_phase(Phase::TrainBackdoor, [&] { train(model_b, poison.dataset); });
  runtimes.train_backdoor = seconds_since(start);

  BackdooredTestSet backdoored;
  double asr = 0.0, acc_o = 0.0, acc_b = 0.0;
  start = std::chrono::steady_clock::now();
  run_phase(Phase::Evaluate, [&] {
    backdoored =
        build_backdoored_test_set(test_set, model_o, cfg.attack, trigger, cfg.explainer);
    asr = attack_success_rate(model_b, backdoored.dataset, cfg.attack.target_class);
    std::vector<int> all(test_set.graphs.size());
    std::iota(all.begin(), all.end(), 0);
    acc_o = model_o.accuracy(test_set, all);
    acc_b = model_b.accuracy(test_set, all);
  });
  runtimes.evaluate = seconds_since(start) - backdoored.explain_seconds;
  runtimes.explain += backdoored.explain_seconds;

  AttackReport report;
  report.dataset = name;
  report.model = to_string(spec.model.architecture);
  report.config = cfg.attack;
  report.seed = cfg.seed;
  report.asr = asr;
  report.cad = acc_o - acc_b;
  report.clean_accuracy_original = acc_o;
  report.clean_accuracy_backdoored = acc_b;
  report.skipped_items = static_cast<int>(poison.skipped_ids.size()) +
                         static_cast<int>(backdoored.skipped_ids.size());
  report.fallback_items = 0;
  report.runtimes = runtimes;
  report.trigger_text = trigger_to_text(trigger);

  artifacts.train_manifest = manifest_to_text(poison.manifest);
  artifacts.test_manifest = manifest_to_text(backdoored.manifest);
  artifacts.trigger_text = report.trigger_text;
  model_o_out.emplace(std::move(model_o));
  model_b_out.emplace(std::move(model_b));
  return report;
}

AttackReport run_node_rep(const ExperimentSpec& spec, const NodeTaskDataset& data,
                          const std::string& name, int rep, RepArtifacts& artifacts,
                          std::optional<GnnModel>& model_o_out,
                          std::optional<GnnModel>& model_b_out) {
  const RepConfigs cfg = rep_configs(spec, rep);
  NodeTaskDataset split = run_phase(Phase::Split, [&] {
    return split_node_dataset(data, spec.node_train_fraction, cfg.seed);
  });

  PhaseRuntimes runtimes;
  GnnModel model_o(cfg.model, TaskKind::NodeClassification, split.graph.feature_dim(),
                   split.class_count);
  auto start = std::chrono::steady_clock::now();
  run_phase(Phase::TrainClean, [&] { train(model_o, split); });
  runtimes.train_clean = seconds_since(start);

  NodePoisonResult poison;
  start = std::chrono::steady_clock::now();
  run_phase(Phase::Poison, [&] {
    poison = poison_node_training_set(split, model_o, cfg.attack, cfg.explainer);
  });
  runtimes.poison = seconds_since(start) - poison.explain_seconds;
  runtimes.explain += poison.explain_seconds;

  GnnModel model_b(cfg.model, TaskKind::NodeClassification, split.graph.feature_dim(),
                   split.class_count);
  start = std::chrono::steady_clock::now();
  run_phase(Phase::TrainBackdoor, [&] { train(model_b, poison.dataset); });
  runtimes.train_backdoor = seconds_since(start);

  double asr = 0.0, acc_o = 0.0, acc_b = 0.0;
  double eval_explain = 0.0;
  int fallbacks = poison.fallback_count;
  std::vector<PoisonManifestEntry> eval_manifest;
  start = std::chrono::steady_clock::now();
  run_phase(Phase::Evaluate, [&] {
    std::vector<int> predicted;
    if (cfg.attack.strategy != SelectionStrategy::Rsa) {
      auto t0 = std::chrono::steady_clock::now();
      predicted = predicted_node_labels(model_o, split.graph);
      eval_explain += seconds_since(t0);
    }
    std::vector<NodeEvalCase> cases;
    for (int v : split.test_nodes()) {
      if (split.graph.node_labels[v] == cfg.attack.target_class) continue;
      NodeEvalTrigger choice = build_node_eval_trigger(split, model_o, cfg.attack,
                                                       poison.shared_trigger, v,
                                                       cfg.explainer, predicted);
      eval_explain += choice.explain_seconds;
      fallbacks += choice.fallback ? 1 : 0;
      NodeEvalCase c;
      c.node = v;
      c.features = inject_feature_trigger(poison.dataset.graph.node_features.row(v),
                                          choice.trigger);
      cases.push_back(std::move(c));
      eval_manifest.push_back({v, cfg.attack.strategy, choice.trigger.indices,
                               trigger_hash(choice.trigger)});
    }
    if (cases.empty()) {
      throw EvaluationImpossibleError(
          "every test node already carries the target label " +
          std::to_string(cfg.attack.target_class));
    }
    asr = attack_success_rate(model_b, poison.dataset.graph, cases,
                              cfg.attack.target_class);
    acc_o = model_o.accuracy(split, split.test_mask);
    acc_b = model_b.accuracy(poison.dataset, poison.dataset.test_mask);
  });
  runtimes.evaluate = seconds_since(start) - eval_explain;
  runtimes.explain += eval_explain;

  AttackReport report;
  report.dataset = name;
  report.model = to_string(spec.model.architecture);
  report.config = cfg.attack;
  report.seed = cfg.seed;
  report.asr = asr;
  report.cad = acc_o - acc_b;
  report.clean_accuracy_original = acc_o;
  report.clean_accuracy_backdoored = acc_b;
  report.skipped_items = 0;
  report.fallback_items = fallbacks;
  report.runtimes = runtimes;
  report.trigger_text = trigger_to_text(poison.shared_trigger);

  artifacts.train_manifest = manifest_to_text(poison.manifest);
  artifacts.test_manifest = manifest_to_text(eval_manifest);
  artifacts.trigger_text = report.trigger_text;
  model_o_out.emplace(std::move(model_o));
  model_b_out.emplace(std::move(model_b));
  return report;
}

}  // namespace

RunSummary run_graph_attack(const ExperimentSpec& spec, const GraphDataset& data) {
  validate_dataset(data);
  validate_spec(spec, TaskKind::GraphClassification, data.class_count);
  const std::string name = spec.dataset_name.empty() ? data.name : spec.dataset_name;
  const DatasetStatistics stats = dataset_statistics(data);
  const bool writing = !spec.out_dir.empty();
  if (writing) {
    make_dirs(spec.out_dir);
    write_text_file(spec.out_dir / "stats.csv", statistics_csv(name, stats));
  }

  RunSummary summary;
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    RepArtifacts artifacts;
    std::optional<GnnModel> model_o, model_b;
    AttackReport report =
        run_graph_rep(spec, data, name, stats.avg_nodes, rep, artifacts, model_o, model_b);
    if (writing) write_rep_dir(spec, rep, report, artifacts, *model_o, *model_b);
    summary.reports.push_back(std::move(report));
  }
  summary.mean = mean_report(summary.reports, spec);
  if (writing) {
    write_text_file(spec.out_dir / "runs.csv", runs_csv(summary.reports));
    write_text_file(spec.out_dir / "summary.json",
                    summary_json(summary, name, to_string(spec.model.architecture)));
  }
  return summary;
}

RunSummary run_graph_attack(const ExperimentSpec& spec) {
  GraphDataset data = run_phase(Phase::Load, [&] {
    return load_tu_dataset(spec.dataset_dir, spec.dataset_name);
  });
  return run_graph_attack(spec, data);
}

RunSummary run_node_attack(const ExperimentSpec& spec, const NodeTaskDataset& data) {
  validate_node_dataset(data);
  validate_spec(spec, TaskKind::NodeClassification, data.class_count);
  const std::string name = spec.dataset_name.empty() ? data.name : spec.dataset_name;
  const bool writing = !spec.out_dir.empty();
  if (writing) {
    make_dirs(spec.out_dir);
    write_text_file(spec.out_dir / "stats.csv",
                    statistics_csv(name, dataset_statistics(data)));
  }

  RunSummary summary;
  for (int rep = 0; rep < spec.repetitions; ++rep) {
    RepArtifacts artifacts;
    std::optional<GnnModel> model_o, model_b;
    AttackReport report = run_node_rep(spec, data, name, rep, artifacts, model_o, model_b);
    if (writing) write_rep_dir(spec, rep, report, artifacts, *model_o, *model_b);
    summary.reports.push_back(std::move(report));
  }
  summary.mean = mean_report(summary.reports, spec);
  if (writing) {
    write_text_file(spec.out_dir / "runs.csv", runs_csv(summary.reports));
    write_text_file(spec.out_dir / "summary.json",
                    summary_json(summary, name, to_string(spec.model.architecture)));
  }
  return summary;
}

RunSummary run_node_attack(const ExperimentSpec& spec) {
  NodeTaskDataset data = run_phase(Phase::Load, [&] {
    return load_citation_dataset(spec.dataset_dir, spec.dataset_name);
  });
  return run_node_attack(spec, data);
}

std::vector<SweepCell> sweep_gamma(const ExperimentSpec& spec,
                                   const std::vector<double>& gammas,
                                   const GraphDataset& data) {
  if (gammas.empty()) throw ArgumentError("sweep needs at least one trigger-size fraction");
  for (double g : gammas) {
    if (!(g > 0.0 && g <= 1.0)) {
      throw ArgumentError("trigger-size fraction " + format_double(g) +
                          " outside (0, 1]");
    }
  }
  if (spec.attack.task != TaskKind::GraphClassification) {
    throw ArgumentError("sweeps cover the graph task only");
  }
  const bool writing = !spec.out_dir.empty();
  if (writing) make_dirs(spec.out_dir);

  static constexpr SelectionStrategy kStrategies[] = {
      SelectionStrategy::Rsa, SelectionStrategy::Mia, SelectionStrategy::Lia};
  std::vector<SweepCell> cells;
  std::string rows = "gamma,strategy,seed,asr,cad\n";
  std::string failures = "gamma,strategy,error\n";
  for (double gamma : gammas) {
    for (SelectionStrategy strategy : kStrategies) {
      ExperimentSpec sub = spec;
      sub.attack.gamma = gamma;
      sub.attack.strategy = strategy;
      sub.out_dir = writing ? spec.out_dir / "sweep" / ("gamma_" + format_double(gamma)) /
                                  to_string(strategy)
                            : fs::path{};
      SweepCell cell;
      cell.gamma = gamma;
      cell.strategy = strategy;
      try {
        cell.summary = run_graph_attack(sub, data);
        for (const AttackReport& r : cell.summary.reports) {
          rows += format_double(gamma) + "," + to_string(strategy) + "," +
                  std::to_string(r.seed) + "," + format_double(r.asr) + "," +
                  format_double(r.cad) + "\n";
        }
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
        std::string clean = cell.error;
        for (char& c : clean) {
          if (c == ',' || c == '\n') c = ';';
        }
        failures += format_double(gamma) + "," + to_string(strategy) + "," + clean + "\n";
      }
      cells.push_back(std::move(cell));
    }
  }
  if (writing) {
    write_text_file(spec.out_dir / "sweep.csv", rows);
    write_text_file(spec.out_dir / "failures.csv", failures);
  }
  return cells;
}

std::vector<SweepCell> sweep_gamma(const ExperimentSpec& spec,
                                   const std::vector<double>& gammas) {
  GraphDataset data = run_phase(Phase::Load, [&] {
    return load_tu_dataset(spec.dataset_dir, spec.dataset_name);
  });
  return sweep_gamma(spec, gammas, data);
}

}  // namespace graphbd
