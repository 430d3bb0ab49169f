#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "synthetic.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef GRAPHBD_CLI_PATH
#error "GRAPHBD_CLI_PATH must point at the built command-line binary"
#endif

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

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

CliResult run_cli(const std::string& args, const std::string& tag) {
  fs::path log = fs::temp_directory_path() / "graphbd_tests" / ("cli_" + tag + ".log");
  fs::create_directories(log.parent_path());
  std::string cmd =
      std::string(GRAPHBD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult result;
  REQUIRE(status != -1);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = read_file(log);
  return result;
}

}  // namespace

TEST_SUITE("integration") {

TEST_CASE("cli reports its version and exits cleanly") {
  CliResult r = run_cli("--version", "version");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("graphbd") != std::string::npos);
}

TEST_CASE("cli rejects unknown flags and missing required options") {
  CHECK(run_cli("attack-graph --no-such-flag", "badflag").exit_code == 2);
  CHECK(run_cli("attack-graph", "missingreq").exit_code == 2);
  CHECK(run_cli("definitely-not-a-command", "badcmd").exit_code == 2);
}

TEST_CASE("cli stats prints the histogram for both dataset formats") {
  fs::path root = fresh_dir("cli_stats");
  graphbd::testsupport::write_tu_fixture(root / "motifs", "motifs", 10, 5);
  graphbd::testsupport::write_citation_fixture(root / "citefix", "citefix");

  CliResult tu =
      run_cli("stats --dataset motifs --data-dir " + root.string(), "stats_tu");
  CHECK(tu.exit_code == 0);
  CHECK(tu.output.find("dataset,graph_count,avg_nodes,avg_edges,class,count") !=
        std::string::npos);
  CHECK(tu.output.find("motifs,10,") != std::string::npos);

  CliResult cite =
      run_cli("stats --dataset citefix --data-dir " + root.string(), "stats_cite");
  CHECK(cite.exit_code == 0);
  CHECK(cite.output.find("citefix,1,40") != std::string::npos);

  CliResult missing =
      run_cli("stats --dataset ghost --data-dir " + root.string(), "stats_missing");
  CHECK(missing.exit_code == 3);
  CHECK(missing.output.find("error:") != std::string::npos);
}

TEST_CASE("cli graph attack runs a tiny experiment to completion") {
  fs::path root = fresh_dir("cli_graph");
  graphbd::testsupport::write_tu_fixture(root / "motifs", "motifs", 24, 11);
  fs::path out = root / "out";

  CliResult r = run_cli("attack-graph --dataset motifs --data-dir " + root.string() +
                            " --model gin --layers 2 --hidden 8 --epochs 10" +
                            " --strategy rsa --target 1 --gamma 0.3 --eta 0.25" +
                            " --reps 1 --seed 9 --out " + out.string(),
                        "attack_graph");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("mean: asr=") != std::string::npos);
  CHECK(fs::exists(out / "runs.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "rep_0" / "report.json"));

  // A second process with the same seed reproduces the same result line.
  fs::path out2 = root / "out2";
  CliResult again = run_cli("attack-graph --dataset motifs --data-dir " + root.string() +
                                " --model gin --layers 2 --hidden 8 --epochs 10" +
                                " --strategy rsa --target 1 --gamma 0.3 --eta 0.25" +
                                " --reps 1 --seed 9 --out " + out2.string(),
                            "attack_graph_again");
  CHECK(again.exit_code == 0);
  std::string row = read_file(out / "runs.csv");
  std::string row2 = read_file(out2 / "runs.csv");
  CHECK(row.substr(0, row.rfind(',')) == row2.substr(0, row2.rfind(',')));

  CliResult missing = run_cli("attack-graph --dataset ghost --data-dir " + root.string(),
                              "attack_graph_missing");
  CHECK(missing.exit_code == 3);
}

TEST_CASE("cli node attack runs a tiny experiment to completion") {
  fs::path root = fresh_dir("cli_node");
  graphbd::testsupport::write_citation_fixture(root / "citefix", "citefix");
  fs::path out = root / "out";

  CliResult r = run_cli("attack-node --dataset citefix --data-dir " + root.string() +
                            " --model sage --layers 2 --hidden 8 --epochs 20" +
                            " --strategy rsa --target 0 --poison-fraction 0.3" +
                            " --feature-fraction 0.2 --train-fraction 0.3" +
                            " --reps 1 --seed 4 --out " + out.string(),
                        "attack_node");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("mean: asr=") != std::string::npos);
  CHECK(fs::exists(out / "runs.csv"));
  CHECK(fs::exists(out / "rep_0" / "trigger.txt"));
  CHECK(read_file(out / "rep_0" / "trigger.txt").rfind("kind feature", 0) == 0);
}

TEST_CASE("cli sweep walks the grid and rejects bad fractions") {
  fs::path root = fresh_dir("cli_sweep");
  graphbd::testsupport::write_tu_fixture(root / "motifs", "motifs", 16, 21);
  fs::path out = root / "out";

  CliResult bad = run_cli("sweep --dataset motifs --data-dir " + root.string() +
                              " --gamma 0.2,1.4",
                          "sweep_bad");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("error:") != std::string::npos);

  CliResult r = run_cli("sweep --dataset motifs --data-dir " + root.string() +
                            " --gamma 0.3 --model gin --layers 2 --hidden 8" +
                            " --epochs 6 --eta 0.3 --explain-iters 4 --reps 1" +
                            " --seed 2 --out " + out.string(),
                        "sweep_ok");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("gamma=0.3 strategy=rsa: asr=") != std::string::npos);
  CHECK(r.output.find("strategy=lia") != std::string::npos);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(fs::exists(out / "failures.csv"));
}

TEST_CASE("cli tables aggregates a finished run directory") {
  fs::path root = fresh_dir("cli_tables");
  {
    std::ofstream outfile(root / "runs.csv");
    outfile << "dataset,model,strategy,gamma,seed,asr,cad,clean_acc_orig,"
               "clean_acc_backdoor,runtime_s\n";
    outfile << "setA,gin,rsa,0.2,1,0.5,0,0.75,0.75,1\n";
  }
  CliResult r = run_cli("tables " + root.string(), "tables_ok");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("asr_cad_matrix.csv") != std::string::npos);
  CHECK(fs::exists(root / "tables" / "asr_cad_matrix.csv"));

  fs::path empty = fresh_dir("cli_tables_empty");
  CliResult none = run_cli("tables " + empty.string(), "tables_empty");
  CHECK(none.exit_code == 3);
}

}  // TEST_SUITE("integration")
