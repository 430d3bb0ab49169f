// Python bindings for the attack pipeline: datasets, models, explainers,
// triggers, poisoning, metrics and the experiment runner.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "graphbd/checkpoint.hpp"
#include "graphbd/dataset_io.hpp"
#include "graphbd/error.hpp"
#include "graphbd/explain.hpp"
#include "graphbd/explain_hsic.hpp"
#include "graphbd/explain_mask.hpp"
#include "graphbd/graph.hpp"
#include "graphbd/metrics.hpp"
#include "graphbd/model.hpp"
#include "graphbd/poison.hpp"
#include "graphbd/runner.hpp"
#include "graphbd/splits.hpp"
#include "graphbd/statistics.hpp"
#include "graphbd/tables.hpp"
#include "graphbd/train.hpp"
#include "graphbd/trigger.hpp"

namespace py = pybind11;
using namespace graphbd;

namespace {

std::vector<char> to_mask(const std::vector<bool>& values) {
  std::vector<char> mask(values.size());
  for (size_t i = 0; i < values.size(); ++i) mask[i] = values[i] ? 1 : 0;
  return mask;
}

std::vector<bool> from_mask(const std::vector<char>& mask) {
  std::vector<bool> values(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) values[i] = mask[i] != 0;
  return values;
}

}  // namespace

PYBIND11_MODULE(_graphbd, m) {
  m.doc() = "explainability-guided backdoor attacks on graph neural networks";

  // Exception hierarchy; later registrations translate first, so the base
  // goes in first as the fallback.
  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
  py::register_exception<IngestionError>(m, "IngestionError", base.ptr());
  py::register_exception<MalformedDatasetError>(m, "MalformedDatasetError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<DegenerateInputError>(m, "DegenerateInputError", base.ptr());
  py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", base.ptr());
  py::register_exception<ExplainerDivergedError>(m, "ExplainerDivergedError", base.ptr());
  py::register_exception<InsufficientSamplesError>(m, "InsufficientSamplesError",
                                                   base.ptr());
  py::register_exception<PoisoningFailedError>(m, "PoisoningFailedError", base.ptr());
  py::register_exception<EvaluationImpossibleError>(m, "EvaluationImpossibleError",
                                                    base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<PhaseError>(m, "PhaseError", base.ptr());

  py::enum_<Architecture>(m, "Architecture")
      .value("gin", Architecture::Gin)
      .value("sage", Architecture::GraphSage)
      .value("gat", Architecture::Gat);
  py::enum_<Readout>(m, "Readout")
      .value("sum", Readout::Sum)
      .value("mean", Readout::Mean);
  py::enum_<TaskKind>(m, "TaskKind")
      .value("graph", TaskKind::GraphClassification)
      .value("node", TaskKind::NodeClassification);
  py::enum_<SelectionStrategy>(m, "SelectionStrategy")
      .value("rsa", SelectionStrategy::Rsa)
      .value("mia", SelectionStrategy::Mia)
      .value("lia", SelectionStrategy::Lia);
  py::enum_<ImportanceKind>(m, "ImportanceKind")
      .value("node", ImportanceKind::NodeImportance)
      .value("feature", ImportanceKind::FeatureImportance);

  py::class_<Graph>(m, "Graph")
      .def(py::init<>())
      .def_readwrite("node_count", &Graph::node_count)
      .def_readwrite("edges", &Graph::edges)
      .def_readwrite("node_features", &Graph::node_features)
      .def_readwrite("graph_label", &Graph::graph_label)
      .def_readwrite("node_labels", &Graph::node_labels)
      .def("edge_count", &Graph::edge_count)
      .def("feature_dim", &Graph::feature_dim)
      .def("edge_index", &Graph::edge_index)
      .def("has_edge", &Graph::has_edge)
      .def("adjacency_list", &Graph::adjacency_list);
  m.def("canonical_edges", &canonical_edges);
  m.def("validate_graph", &validate_graph);
  m.def("k_hop_neighborhood", &k_hop_neighborhood);
  m.def("induced_subgraph", &induced_subgraph);

  py::class_<GraphDataset>(m, "GraphDataset")
      .def(py::init<>())
      .def_readwrite("name", &GraphDataset::name)
      .def_readwrite("graphs", &GraphDataset::graphs)
      .def_readwrite("class_count", &GraphDataset::class_count)
      .def("size", &GraphDataset::size)
      .def("feature_dim", &GraphDataset::feature_dim);
  m.def("validate_dataset", &validate_dataset);

  py::class_<NodeTaskDataset>(m, "NodeTaskDataset")
      .def(py::init<>())
      .def_readwrite("name", &NodeTaskDataset::name)
      .def_readwrite("graph", &NodeTaskDataset::graph)
      .def_readwrite("class_count", &NodeTaskDataset::class_count)
      .def_property(
          "train_mask", [](const NodeTaskDataset& d) { return from_mask(d.train_mask); },
          [](NodeTaskDataset& d, const std::vector<bool>& v) { d.train_mask = to_mask(v); })
      .def_property(
          "test_mask", [](const NodeTaskDataset& d) { return from_mask(d.test_mask); },
          [](NodeTaskDataset& d, const std::vector<bool>& v) { d.test_mask = to_mask(v); })
      .def("train_nodes", &NodeTaskDataset::train_nodes)
      .def("test_nodes", &NodeTaskDataset::test_nodes);
  m.def("validate_node_dataset", &validate_node_dataset);

  m.def("load_tu_dataset", &load_tu_dataset, py::arg("directory"), py::arg("name") = "");
  m.def("save_tu_dataset", &save_tu_dataset);
  m.def(
      "load_citation_dataset",
      [](const std::filesystem::path& directory, const std::string& name) {
        CitationLoadStats stats;
        NodeTaskDataset data = load_citation_dataset(directory, name, &stats);
        return py::make_tuple(std::move(data), stats.dropped_edges);
      },
      py::arg("directory"), py::arg("name") = "",
      "returns (dataset, dropped_edge_count)");

  m.def("split_graph_dataset", &split_graph_dataset);
  m.def("split_node_dataset", &split_node_dataset);

  py::class_<DatasetStatistics>(m, "DatasetStatistics")
      .def_readonly("graph_count", &DatasetStatistics::graph_count)
      .def_readonly("avg_nodes", &DatasetStatistics::avg_nodes)
      .def_readonly("avg_edges", &DatasetStatistics::avg_edges)
      .def_readonly("class_histogram", &DatasetStatistics::class_histogram);
  m.def("dataset_statistics",
        py::overload_cast<const GraphDataset&>(&dataset_statistics));
  m.def("dataset_statistics",
        py::overload_cast<const NodeTaskDataset&>(&dataset_statistics));
  m.def("statistics_csv", &statistics_csv);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_readwrite("architecture", &ModelConfig::architecture)
      .def_readwrite("layer_count", &ModelConfig::layer_count)
      .def_readwrite("hidden_dim", &ModelConfig::hidden_dim)
      .def_readwrite("attention_heads", &ModelConfig::attention_heads)
      .def_readwrite("readout", &ModelConfig::readout)
      .def_readwrite("learning_rate", &ModelConfig::learning_rate)
      .def_readwrite("epochs", &ModelConfig::epochs)
      .def_readwrite("dropout", &ModelConfig::dropout)
      .def_readwrite("weight_decay", &ModelConfig::weight_decay)
      .def_readwrite("batch_size", &ModelConfig::batch_size)
      .def_readwrite("seed", &ModelConfig::seed);
  m.def("default_graph_config", &default_graph_config);
  m.def("default_node_config", &default_node_config);
  m.def("validate_config", &validate_config);

  py::class_<GnnModel>(m, "GnnModel")
      .def(py::init<ModelConfig, TaskKind, int, int>(), py::arg("config"), py::arg("task"),
           py::arg("feature_dim"), py::arg("class_count"))
      .def_property_readonly("config", &GnnModel::config)
      .def_property_readonly("task", &GnnModel::task)
      .def_property_readonly("feature_dim", &GnnModel::feature_dim)
      .def_property_readonly("class_count", &GnnModel::class_count)
      .def_property_readonly("parameter_names", &GnnModel::parameter_names)
      .def("parameters", &GnnModel::parameters)
      .def("set_parameters", &GnnModel::set_parameters)
      .def("predict_graphs", &GnnModel::predict_graphs)
      .def("predict_graph", &GnnModel::predict_graph)
      .def("predict_nodes", &GnnModel::predict_nodes)
      .def("predicted_graph_label", &GnnModel::predicted_graph_label)
      .def("accuracy",
           py::overload_cast<const GraphDataset&, const std::vector<int>&>(
               &GnnModel::accuracy, py::const_))
      .def("accuracy", [](const GnnModel& model, const NodeTaskDataset& data,
                          const std::vector<bool>& mask) {
        return model.accuracy(data, to_mask(mask));
      });
  m.def("aggregate_layer", &aggregate_layer);
  m.def("neighbor_mean", &neighbor_mean);
  m.def("readout", &readout);
  m.def("predict_node_exact", &predict_node_exact, py::arg("model"), py::arg("graph"),
        py::arg("node"),
        py::arg("feature_overrides") = std::vector<std::pair<int, Eigen::RowVectorXd>>{});

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("loss_history", &TrainResult::loss_history);
  m.def("train", py::overload_cast<GnnModel&, const GraphDataset&>(&train));
  m.def("train", py::overload_cast<GnnModel&, const NodeTaskDataset&>(&train));

  m.def("save_checkpoint", &save_checkpoint);
  m.def("load_checkpoint", &load_checkpoint);

  py::class_<ImportanceScores>(m, "ImportanceScores")
      .def(py::init<>())
      .def_readwrite("kind", &ImportanceScores::kind)
      .def_readwrite("scores", &ImportanceScores::scores)
      .def_readwrite("subject", &ImportanceScores::subject);

  py::class_<ExplainerConfig>(m, "ExplainerConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &ExplainerConfig::iterations)
      .def_readwrite("step_size", &ExplainerConfig::step_size)
      .def_readwrite("mask_size_weight", &ExplainerConfig::mask_size_weight)
      .def_readwrite("mask_entropy_weight", &ExplainerConfig::mask_entropy_weight)
      .def_readwrite("hop_count", &ExplainerConfig::hop_count)
      .def_readwrite("top_features", &ExplainerConfig::top_features)
      .def_readwrite("kernel_bandwidth_rule", &ExplainerConfig::kernel_bandwidth_rule)
      .def_readwrite("hsic_lambda", &ExplainerConfig::hsic_lambda)
      .def_readwrite("max_samples", &ExplainerConfig::max_samples)
      .def_readwrite("seed", &ExplainerConfig::seed);
  m.def("validate_explainer_config", &validate_explainer_config);
  m.def("write_importance_csv", [](const std::vector<ImportanceScores>& scores) {
    std::ostringstream out;
    write_importance_csv(out, scores);
    return out.str();
  });

  py::class_<EdgeMask>(m, "EdgeMask")
      .def_readonly("edges", &EdgeMask::edges)
      .def_readonly("values", &EdgeMask::values)
      .def("value", &EdgeMask::value);
  m.def("explain_graph", &explain_graph);
  m.def("node_importance", &node_importance);

  m.def("hsic_lasso", &hsic_lasso);
  m.def("explain_node_features",
        py::overload_cast<const GnnModel&, const NodeTaskDataset&, int,
                          const ExplainerConfig&>(&explain_node_features));
  m.def("predicted_node_labels", &predicted_node_labels);

  py::class_<TriggerGraph>(m, "TriggerGraph")
      .def(py::init<>())
      .def_readwrite("node_count", &TriggerGraph::node_count)
      .def_readwrite("edges", &TriggerGraph::edges)
      .def_readwrite("density", &TriggerGraph::density)
      .def_readwrite("seed", &TriggerGraph::seed)
      .def("edge_count", &TriggerGraph::edge_count);
  py::class_<FeatureTrigger>(m, "FeatureTrigger")
      .def(py::init<>())
      .def_readwrite("indices", &FeatureTrigger::indices)
      .def_readwrite("fill_value", &FeatureTrigger::fill_value)
      .def("size", &FeatureTrigger::size);
  m.def("trigger_size_from_gamma", &trigger_size_from_gamma);
  m.def("generate_er_trigger", &generate_er_trigger);
  m.def("feature_trigger_size", &feature_trigger_size);
  m.def("build_feature_trigger", &build_feature_trigger, py::arg("indices"),
        py::arg("fill_value") = 1.0, py::arg("feature_dim") = -1);
  m.def("trigger_to_text", py::overload_cast<const TriggerGraph&>(&trigger_to_text));
  m.def("trigger_to_text", py::overload_cast<const FeatureTrigger&>(&trigger_to_text));
  m.def("trigger_hash", py::overload_cast<const TriggerGraph&>(&trigger_hash));
  m.def("trigger_hash", py::overload_cast<const FeatureTrigger&>(&trigger_hash));

  py::class_<AttackConfig>(m, "AttackConfig")
      .def(py::init<>())
      .def_readwrite("task", &AttackConfig::task)
      .def_readwrite("strategy", &AttackConfig::strategy)
      .def_readwrite("target_class", &AttackConfig::target_class)
      .def_readwrite("gamma", &AttackConfig::gamma)
      .def_readwrite("rho", &AttackConfig::rho)
      .def_readwrite("eta", &AttackConfig::eta)
      .def_readwrite("poison_fraction", &AttackConfig::poison_fraction)
      .def_readwrite("feature_fraction", &AttackConfig::feature_fraction)
      .def_readwrite("fill_value", &AttackConfig::fill_value)
      .def_readwrite("seed", &AttackConfig::seed);
  m.def("validate_attack_config", &validate_attack_config);

  m.def(
      "select_trigger_nodes",
      [](const Graph& graph, const std::optional<ImportanceScores>& importance, int t,
         SelectionStrategy strategy, std::uint64_t seed) {
        return select_trigger_nodes(graph, importance ? &*importance : nullptr, t,
                                    strategy, seed);
      },
      py::arg("graph"), py::arg("importance"), py::arg("t"), py::arg("strategy"),
      py::arg("seed"));
  m.def("inject_graph_trigger", &inject_graph_trigger);
  m.def(
      "select_trigger_features",
      [](const std::optional<ImportanceScores>& importance, int n,
         SelectionStrategy strategy, std::uint64_t seed, int feature_dim) {
        return select_trigger_features(importance ? &*importance : nullptr, n, strategy,
                                       seed, feature_dim);
      },
      py::arg("importance"), py::arg("n"), py::arg("strategy"), py::arg("seed"),
      py::arg("feature_dim"));
  m.def("inject_feature_trigger", &inject_feature_trigger);

  py::class_<PoisonManifestEntry>(m, "PoisonManifestEntry")
      .def_readonly("item_id", &PoisonManifestEntry::item_id)
      .def_readonly("strategy", &PoisonManifestEntry::strategy)
      .def_readonly("selected", &PoisonManifestEntry::selected)
      .def_readonly("trigger_hash", &PoisonManifestEntry::trigger_hash);
  m.def("manifest_to_text", &manifest_to_text);

  py::class_<GraphPoisonResult>(m, "GraphPoisonResult")
      .def_readonly("dataset", &GraphPoisonResult::dataset)
      .def_readonly("poisoned_ids", &GraphPoisonResult::poisoned_ids)
      .def_readonly("skipped_ids", &GraphPoisonResult::skipped_ids)
      .def_readonly("manifest", &GraphPoisonResult::manifest)
      .def_readonly("explain_seconds", &GraphPoisonResult::explain_seconds);
  m.def("poison_graph_training_set", &poison_graph_training_set, py::arg("train"),
        py::arg("model_o"), py::arg("config"), py::arg("trigger"),
        py::arg("explainer") = ExplainerConfig{});

  py::class_<BackdooredTestSet>(m, "BackdooredTestSet")
      .def_readonly("dataset", &BackdooredTestSet::dataset)
      .def_readonly("source_ids", &BackdooredTestSet::source_ids)
      .def_readonly("skipped_ids", &BackdooredTestSet::skipped_ids)
      .def_readonly("manifest", &BackdooredTestSet::manifest)
      .def_readonly("explain_seconds", &BackdooredTestSet::explain_seconds);
  m.def("build_backdoored_test_set", &build_backdoored_test_set, py::arg("test"),
        py::arg("model_o"), py::arg("config"), py::arg("trigger"),
        py::arg("explainer") = ExplainerConfig{});

  py::class_<NodePoisonResult>(m, "NodePoisonResult")
      .def_readonly("dataset", &NodePoisonResult::dataset)
      .def_readonly("poisoned_nodes", &NodePoisonResult::poisoned_nodes)
      .def_readonly("shared_trigger", &NodePoisonResult::shared_trigger)
      .def_readonly("node_triggers", &NodePoisonResult::node_triggers)
      .def_readonly("manifest", &NodePoisonResult::manifest)
      .def_readonly("fallback_count", &NodePoisonResult::fallback_count)
      .def_readonly("explain_seconds", &NodePoisonResult::explain_seconds);
  m.def("poison_node_training_set", &poison_node_training_set, py::arg("dataset"),
        py::arg("model_o"), py::arg("config"), py::arg("explainer") = ExplainerConfig{});

  py::class_<PhaseRuntimes>(m, "PhaseRuntimes")
      .def_readonly("train_clean", &PhaseRuntimes::train_clean)
      .def_readonly("explain", &PhaseRuntimes::explain)
      .def_readonly("poison", &PhaseRuntimes::poison)
      .def_readonly("train_backdoor", &PhaseRuntimes::train_backdoor)
      .def_readonly("evaluate", &PhaseRuntimes::evaluate)
      .def("total", &PhaseRuntimes::total);

  py::class_<AttackReport>(m, "AttackReport")
      .def_readonly("dataset", &AttackReport::dataset)
      .def_readonly("model", &AttackReport::model)
      .def_readonly("config", &AttackReport::config)
      .def_readonly("seed", &AttackReport::seed)
      .def_readonly("asr", &AttackReport::asr)
      .def_readonly("cad", &AttackReport::cad)
      .def_readonly("clean_accuracy_original", &AttackReport::clean_accuracy_original)
      .def_readonly("clean_accuracy_backdoored", &AttackReport::clean_accuracy_backdoored)
      .def_readonly("skipped_items", &AttackReport::skipped_items)
      .def_readonly("fallback_items", &AttackReport::fallback_items)
      .def_readonly("runtimes", &AttackReport::runtimes)
      .def_readonly("trigger_text", &AttackReport::trigger_text);

  py::class_<NodeEvalCase>(m, "NodeEvalCase")
      .def(py::init<>())
      .def_readwrite("node", &NodeEvalCase::node)
      .def_readwrite("features", &NodeEvalCase::features);
  m.def("attack_success_rate",
        py::overload_cast<const GnnModel&, const GraphDataset&, int>(&attack_success_rate));
  m.def("attack_success_rate",
        py::overload_cast<const GnnModel&, const Graph&, const std::vector<NodeEvalCase>&,
                          int>(&attack_success_rate));
  m.def("clean_accuracy_drop",
        py::overload_cast<const GnnModel&, const GnnModel&, const GraphDataset&>(
            &clean_accuracy_drop));
  m.def("clean_accuracy_drop",
        py::overload_cast<const GnnModel&, const NodeTaskDataset&, const GnnModel&,
                          const NodeTaskDataset&>(&clean_accuracy_drop));
  m.def("report_to_json", &report_to_json);
  m.def("report_csv_header", &report_csv_header);
  m.def("report_csv_row", &report_csv_row);
  m.def("format_double", &format_double);

  py::class_<ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("dataset_name", &ExperimentSpec::dataset_name)
      .def_readwrite("dataset_dir", &ExperimentSpec::dataset_dir)
      .def_readwrite("model", &ExperimentSpec::model)
      .def_readwrite("attack", &ExperimentSpec::attack)
      .def_readwrite("explainer", &ExperimentSpec::explainer)
      .def_readwrite("repetitions", &ExperimentSpec::repetitions)
      .def_readwrite("out_dir", &ExperimentSpec::out_dir)
      .def_readwrite("train_fraction", &ExperimentSpec::train_fraction)
      .def_readwrite("node_train_fraction", &ExperimentSpec::node_train_fraction)
      .def_readwrite("write_checkpoints", &ExperimentSpec::write_checkpoints);
  py::class_<RunSummary>(m, "RunSummary")
      .def_readonly("reports", &RunSummary::reports)
      .def_readonly("mean", &RunSummary::mean);
  m.def("run_graph_attack", py::overload_cast<const ExperimentSpec&>(&run_graph_attack));
  m.def("run_graph_attack",
        py::overload_cast<const ExperimentSpec&, const GraphDataset&>(&run_graph_attack));
  m.def("run_node_attack", py::overload_cast<const ExperimentSpec&>(&run_node_attack));
  m.def("run_node_attack",
        py::overload_cast<const ExperimentSpec&, const NodeTaskDataset&>(&run_node_attack));

  py::class_<SweepCell>(m, "SweepCell")
      .def_readonly("gamma", &SweepCell::gamma)
      .def_readonly("strategy", &SweepCell::strategy)
      .def_readonly("failed", &SweepCell::failed)
      .def_readonly("error", &SweepCell::error)
      .def_readonly("summary", &SweepCell::summary);
  m.def("sweep_gamma", py::overload_cast<const ExperimentSpec&, const std::vector<double>&>(
                           &sweep_gamma));
  m.def("sweep_gamma",
        py::overload_cast<const ExperimentSpec&, const std::vector<double>&,
                          const GraphDataset&>(&sweep_gamma));

  m.def("emit_tables", &emit_tables);
}
