#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "graphbd/checkpoint.hpp"
#include "graphbd/error.hpp"
#include "graphbd/runner.hpp"
#include "graphbd/tables.hpp"
#include "synthetic.hpp"

using namespace graphbd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "graphbd_tests" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Fast-but-real experiment: small model, few epochs, two repetitions.
ExperimentSpec tiny_graph_spec(SelectionStrategy strategy = SelectionStrategy::Rsa) {
  ExperimentSpec spec;
  spec.dataset_name = "motifs";
  spec.model = default_graph_config(Architecture::Gin);
  spec.model.layer_count = 2;
  spec.model.hidden_dim = 8;
  spec.model.epochs = 12;
  spec.model.batch_size = 8;
  spec.model.dropout = 0.0;
  spec.attack.task = TaskKind::GraphClassification;
  spec.attack.strategy = strategy;
  spec.attack.target_class = 1;
  spec.attack.gamma = 0.3;
  spec.attack.rho = 0.8;
  spec.attack.eta = 0.25;
  spec.attack.seed = 100;
  spec.explainer.iterations = 5;
  spec.repetitions = 2;
  return spec;
}

ExperimentSpec tiny_node_spec(SelectionStrategy strategy = SelectionStrategy::Rsa) {
  ExperimentSpec spec;
  spec.dataset_name = "features";
  spec.model = default_node_config(Architecture::GraphSage);
  spec.model.layer_count = 2;
  spec.model.hidden_dim = 8;
  spec.model.epochs = 30;
  spec.model.learning_rate = 0.02;
  spec.model.dropout = 0.0;
  spec.attack.task = TaskKind::NodeClassification;
  spec.attack.strategy = strategy;
  spec.attack.target_class = 0;
  spec.attack.poison_fraction = 0.3;
  spec.attack.feature_fraction = 0.34;  // two of six feature dims
  spec.attack.fill_value = 1.0;
  spec.attack.seed = 200;
  spec.explainer.iterations = 5;
  spec.repetitions = 2;
  spec.node_train_fraction = 0.3;
  return spec;
}

// Drops the trailing runtime_s column, the one legitimately varying field.
std::string strip_runtime(const std::string& csv_row) {
  return csv_row.substr(0, csv_row.rfind(','));
}

}  // namespace

TEST_SUITE("integration") {

TEST_CASE("graph attack writes the full artifact tree") {
  fs::path out = fresh_dir("runner_graph");
  GraphDataset data = testsupport::make_motif_dataset(30, 7);
  ExperimentSpec spec = tiny_graph_spec();
  spec.out_dir = out;

  RunSummary summary = run_graph_attack(spec, data);

  REQUIRE(summary.reports.size() == 2);
  for (const AttackReport& r : summary.reports) {
    CHECK(r.asr >= 0.0);
    CHECK(r.asr <= 1.0);
    CHECK(r.clean_accuracy_original >= 0.0);
    CHECK(r.clean_accuracy_original <= 1.0);
    CHECK(r.dataset == "motifs");
    CHECK(r.model == "gin");
    CHECK(r.runtimes.total() > 0.0);
  }
  CHECK(summary.reports[0].seed == 100);
  CHECK(summary.reports[1].seed == 101);
  CHECK(summary.mean.asr ==
        doctest::Approx((summary.reports[0].asr + summary.reports[1].asr) / 2));
  CHECK(summary.mean.seed == 100);
  CHECK(summary.mean.trigger_text.empty());

  CHECK(fs::exists(out / "stats.csv"));
  CHECK(fs::exists(out / "runs.csv"));
  CHECK(fs::exists(out / "summary.json"));
  for (int rep = 0; rep < 2; ++rep) {
    fs::path dir = out / ("rep_" + std::to_string(rep));
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "manifest.txt"));
    CHECK(fs::exists(dir / "test_manifest.txt"));
    CHECK(fs::exists(dir / "trigger.txt"));
    CHECK(fs::exists(dir / "checkpoint_original.json"));
    CHECK(fs::exists(dir / "checkpoint_backdoored.json"));
  }

  // stats.csv carries the histogram header; runs.csv one row per repetition.
  CHECK(read_file(out / "stats.csv").rfind("dataset,graph_count,avg_nodes,avg_edges", 0) ==
        0);
  std::string runs = read_file(out / "runs.csv");
  CHECK(runs.rfind(report_csv_header(), 0) == 0);
  CHECK(std::count(runs.begin(), runs.end(), '\n') == 3);  // header + 2 rows

  nlohmann::json sj = nlohmann::json::parse(read_file(out / "summary.json"));
  CHECK(sj["format"] == "graphbd.summary");
  CHECK(sj["version"] == 1);
  CHECK(sj["dataset"] == "motifs");
  CHECK(sj["model"] == "gin");
  CHECK(sj["repetitions"] == 2);
  CHECK(sj["runs"].size() == 2);
  CHECK(sj["mean"]["asr"] == doctest::Approx(summary.mean.asr));

  // Saved checkpoints restore to a model with the run's configuration.
  GnnModel restored = load_checkpoint(out / "rep_0" / "checkpoint_backdoored.json");
  CHECK(restored.config().architecture == Architecture::Gin);
  CHECK(restored.task() == TaskKind::GraphClassification);
  CHECK(restored.feature_dim() == data.feature_dim());

  // The trigger text matches the repetition's report.
  nlohmann::json rj = nlohmann::json::parse(read_file(out / "rep_0" / "report.json"));
  CHECK(rj["trigger"] == read_file(out / "rep_0" / "trigger.txt"));
}

TEST_CASE("graph attack repeats bit-identically apart from runtimes") {
  GraphDataset data = testsupport::make_motif_dataset(26, 15);
  ExperimentSpec spec = tiny_graph_spec();
  spec.out_dir.clear();  // compute only

  RunSummary a = run_graph_attack(spec, data);
  RunSummary b = run_graph_attack(spec, data);
  REQUIRE(a.reports.size() == b.reports.size());
  for (size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(strip_runtime(report_csv_row(a.reports[i])) ==
          strip_runtime(report_csv_row(b.reports[i])));
    CHECK(a.reports[i].trigger_text == b.reports[i].trigger_text);
  }

  // A different base seed changes the outcome stream.
  spec.attack.seed = 777;
  RunSummary c = run_graph_attack(spec, data);
  bool any_diff = false;
  for (size_t i = 0; i < a.reports.size(); ++i) {
    any_diff = any_diff || strip_runtime(report_csv_row(a.reports[i])) !=
                               strip_runtime(report_csv_row(c.reports[i]));
  }
  CHECK(any_diff);
}

TEST_CASE("importance-guided graph attack runs end to end") {
  GraphDataset data = testsupport::make_motif_dataset(24, 33);
  ExperimentSpec spec = tiny_graph_spec(SelectionStrategy::Mia);
  spec.repetitions = 1;
  spec.out_dir.clear();

  RunSummary summary = run_graph_attack(spec, data);
  REQUIRE(summary.reports.size() == 1);
  CHECK(summary.reports[0].runtimes.explain > 0.0);
  CHECK(summary.reports[0].config.strategy == SelectionStrategy::Mia);
}

TEST_CASE("graph attack validates its spec") {
  GraphDataset data = testsupport::make_motif_dataset(12, 3);
  SUBCASE("repetitions") {
    ExperimentSpec spec = tiny_graph_spec();
    spec.repetitions = 0;
    CHECK_THROWS_AS(run_graph_attack(spec, data), ArgumentError);
  }
  SUBCASE("task mismatch") {
    ExperimentSpec spec = tiny_graph_spec();
    spec.attack.task = TaskKind::NodeClassification;
    CHECK_THROWS_AS(run_graph_attack(spec, data), ArgumentError);
  }
  SUBCASE("train fraction") {
    ExperimentSpec spec = tiny_graph_spec();
    spec.train_fraction = 1.5;
    CHECK_THROWS_AS(run_graph_attack(spec, data), ArgumentError);
  }
  SUBCASE("missing dataset directory") {
    ExperimentSpec spec = tiny_graph_spec();
    spec.dataset_dir = fs::temp_directory_path() / "graphbd_tests" / "no_such_dir";
    spec.dataset_name = "nothing";
    try {
      run_graph_attack(spec);
      FAIL("expected a load failure");
    } catch (const PhaseError& e) {
      CHECK(e.phase == Phase::Load);
    }
  }
}

TEST_CASE("node attack writes artifacts and scores the poisoned deployment") {
  fs::path out = fresh_dir("runner_node");
  NodeTaskDataset data = testsupport::make_feature_dataset(80, 6, 2, 41);
  ExperimentSpec spec = tiny_node_spec();
  spec.out_dir = out;

  RunSummary summary = run_node_attack(spec, data);

  REQUIRE(summary.reports.size() == 2);
  for (const AttackReport& r : summary.reports) {
    CHECK(r.asr >= 0.0);
    CHECK(r.asr <= 1.0);
    CHECK(r.model == "graphsage");
    CHECK(r.skipped_items == 0);
    CHECK(r.fallback_items >= 0);
    // The shared trigger is a feature trigger over two of six dims.
    CHECK(r.trigger_text.rfind("kind feature", 0) == 0);
  }
  CHECK(fs::exists(out / "runs.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "rep_1" / "checkpoint_backdoored.json"));

  GnnModel restored = load_checkpoint(out / "rep_0" / "checkpoint_original.json");
  CHECK(restored.task() == TaskKind::NodeClassification);
  CHECK(restored.config().architecture == Architecture::GraphSage);
}

TEST_CASE("node attack repeats bit-identically apart from runtimes") {
  NodeTaskDataset data = testsupport::make_feature_dataset(70, 6, 1, 59);
  ExperimentSpec spec = tiny_node_spec();
  spec.out_dir.clear();

  RunSummary a = run_node_attack(spec, data);
  RunSummary b = run_node_attack(spec, data);
  REQUIRE(a.reports.size() == b.reports.size());
  for (size_t i = 0; i < a.reports.size(); ++i) {
    CHECK(strip_runtime(report_csv_row(a.reports[i])) ==
          strip_runtime(report_csv_row(b.reports[i])));
    CHECK(a.reports[i].trigger_text == b.reports[i].trigger_text);
  }
}

TEST_CASE("importance-guided node attack runs end to end") {
  NodeTaskDataset data = testsupport::make_feature_dataset(60, 6, 3, 67);
  ExperimentSpec spec = tiny_node_spec(SelectionStrategy::Lia);
  spec.repetitions = 1;
  spec.out_dir.clear();

  RunSummary summary = run_node_attack(spec, data);
  REQUIRE(summary.reports.size() == 1);
  CHECK(summary.reports[0].runtimes.explain > 0.0);
}

TEST_CASE("gamma sweep covers the strategy grid and records failures") {
  fs::path out = fresh_dir("runner_sweep");
  GraphDataset data = testsupport::make_motif_dataset(18, 91);
  ExperimentSpec spec = tiny_graph_spec();
  spec.model.epochs = 8;
  spec.repetitions = 1;
  spec.explainer.iterations = 4;
  spec.out_dir = out;

  std::vector<SweepCell> cells = sweep_gamma(spec, {0.15, 0.25}, data);
  REQUIRE(cells.size() == 6);
  int index = 0;
  for (double gamma : {0.15, 0.25}) {
    for (SelectionStrategy strategy :
         {SelectionStrategy::Rsa, SelectionStrategy::Mia, SelectionStrategy::Lia}) {
      CHECK(cells[index].gamma == gamma);
      CHECK(cells[index].strategy == strategy);
      CHECK_FALSE(cells[index].failed);
      CHECK(cells[index].summary.reports.size() == 1);
      ++index;
    }
  }

  std::string sweep = read_file(out / "sweep.csv");
  CHECK(sweep.rfind("gamma,strategy,seed,asr,cad\n", 0) == 0);
  CHECK(std::count(sweep.begin(), sweep.end(), '\n') == 7);  // header + 6 rows
  CHECK(sweep.find("0.15,rsa,") != std::string::npos);
  CHECK(sweep.find("0.25,lia,") != std::string::npos);

  // Every successful cell also left its own artifact tree.
  CHECK(fs::exists(out / "sweep" / "gamma_0.15" / "rsa" / "runs.csv"));
  CHECK(fs::exists(out / "sweep" / "gamma_0.25" / "lia" / "summary.json"));

  std::string failures = read_file(out / "failures.csv");
  CHECK(failures == "gamma,strategy,error\n");
}

TEST_CASE("a sweep whose cells all fail reports every failure and keeps going") {
  fs::path out = fresh_dir("runner_sweep_fail");
  GraphDataset data = testsupport::make_motif_dataset(16, 28);
  ExperimentSpec spec = tiny_graph_spec();
  spec.repetitions = 1;
  spec.attack.eta = 0.001;  // rounds to zero training graphs -> poisoning fails
  spec.out_dir = out;

  std::vector<SweepCell> cells = sweep_gamma(spec, {0.2}, data);
  REQUIRE(cells.size() == 3);
  for (const SweepCell& cell : cells) {
    CHECK(cell.failed);
    CHECK(cell.error.find("[poison]") != std::string::npos);
  }
  std::string failures = read_file(out / "failures.csv");
  CHECK(std::count(failures.begin(), failures.end(), '\n') == 4);  // header + 3
  std::string sweep = read_file(out / "sweep.csv");
  CHECK(sweep == "gamma,strategy,seed,asr,cad\n");
}

TEST_CASE("sweep arguments are validated") {
  GraphDataset data = testsupport::make_motif_dataset(12, 2);
  ExperimentSpec spec = tiny_graph_spec();
  CHECK_THROWS_AS(sweep_gamma(spec, {}, data), ArgumentError);
  CHECK_THROWS_AS(sweep_gamma(spec, {0.2, 1.4}, data), ArgumentError);
  spec.attack.task = TaskKind::NodeClassification;
  CHECK_THROWS_AS(sweep_gamma(spec, {0.2}, data), ArgumentError);
}

TEST_CASE("tables aggregate run and sweep files into means") {
  fs::path root = fresh_dir("tables_ok");
  fs::create_directories(root / "expA");
  fs::create_directories(root / "expB");
  {
    std::ofstream out(root / "expA" / "runs.csv");
    out << report_csv_header() << "\n";
    out << "setA,gin,rsa,0.2,1,0.5,0.25,0.75,0.5,9.9\n";
    out << "setA,gin,rsa,0.2,2,0.75,0.75,0.75,0.5,9.9\n";
    out << "setA,gin,mia,0.2,1,1,0,0.75,0.75,9.9\n";
  }
  {
    std::ofstream out(root / "expA" / "stats.csv");
    out << "dataset,graph_count,avg_nodes,avg_edges,class,count\n";
    out << "setA,10,5,4,0,6\n";
    out << "setA,10,5,4,1,4\n";
  }
  {
    std::ofstream out(root / "expB" / "sweep.csv");
    out << "gamma,strategy,seed,asr,cad\n";
    out << "0.1,rsa,1,0.25,0\n";
    out << "0.1,rsa,2,0.75,0.5\n";
    out << "0.2,lia,1,1,0.25\n";
  }

  std::vector<fs::path> written = emit_tables(root);
  REQUIRE(written.size() == 3);
  CHECK(fs::exists(root / "tables" / "dataset_stats.csv"));
  CHECK(fs::exists(root / "tables" / "asr_cad_matrix.csv"));
  CHECK(fs::exists(root / "tables" / "sweep_series.csv"));

  std::string matrix = read_file(root / "tables" / "asr_cad_matrix.csv");
  CHECK(matrix.rfind("dataset,model,rsa_runs,rsa_asr,rsa_cad,mia_runs,mia_asr,mia_cad,"
                     "lia_runs,lia_asr,lia_cad\n",
                     0) == 0);
  // rsa mean over two rows, mia single row, lia absent.
  CHECK(matrix.find("setA,gin,2,0.625,0.5,1,1,0,0,,") != std::string::npos);

  std::string series = read_file(root / "tables" / "sweep_series.csv");
  CHECK(series.rfind("strategy,gamma,runs,mean_asr,mean_cad\n", 0) == 0);
  CHECK(series.find("rsa,0.1,2,0.5,0.25") != std::string::npos);
  CHECK(series.find("lia,0.2,1,1,0.25") != std::string::npos);

  std::string stats = read_file(root / "tables" / "dataset_stats.csv");
  CHECK(stats.find("setA,10,5,4,0,6") != std::string::npos);
}

TEST_CASE("tables reject unusable inputs") {
  fs::path empty = fresh_dir("tables_empty");
  CHECK_THROWS_AS(emit_tables(empty), DegenerateInputError);
  CHECK_THROWS_AS(emit_tables(empty / "missing"), ArgumentError);

  fs::path broken = fresh_dir("tables_broken");
  {
    std::ofstream out(broken / "runs.csv");
    out << "dataset,model,strategy\n";  // missing the numeric columns
    out << "setA,gin,rsa\n";
  }
  CHECK_THROWS_AS(emit_tables(broken), SchemaError);

  fs::path badnum = fresh_dir("tables_badnum");
  {
    std::ofstream out(badnum / "runs.csv");
    out << report_csv_header() << "\n";
    out << "setA,gin,rsa,0.2,1,not_a_number,0,0.5,0.5,1\n";
  }
  CHECK_THROWS_AS(emit_tables(badnum), SchemaError);
}

}  // TEST_SUITE("integration")
