#include "graphbd/tables.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>

#include "graphbd/error.hpp"
#include "graphbd/metrics.hpp"
#include "graphbd/poison.hpp"

namespace graphbd {
namespace {

namespace fs = std::filesystem;

struct CsvFile {
  fs::path path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

CsvFile read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  CsvFile file;
  file.path = path;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      file.header = split_line(line);
      first = false;
    } else {
      file.rows.push_back(split_line(line));
    }
  }
  return file;
}

int column(const CsvFile& file, const std::string& name) {
  for (size_t i = 0; i < file.header.size(); ++i) {
    if (file.header[i] == name) return static_cast<int>(i);
  }
  throw SchemaError(file.path.string() + " lacks column '" + name + "'");
}

const std::string& cell(const CsvFile& file, const std::vector<std::string>& row, int col) {
  if (col < 0 || static_cast<size_t>(col) >= row.size()) {
    throw SchemaError(file.path.string() + " has a row with too few cells");
  }
  return row[static_cast<size_t>(col)];
}

double number(const CsvFile& file, const std::vector<std::string>& row, int col) {
  const std::string& text = cell(file, row, col);
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw SchemaError(file.path.string() + ": '" + text + "' is not a number");
  }
  return value;
}

// Mean accumulator for (success rate, accuracy drop) pairs.
struct Agg {
  int n = 0;
  double asr = 0.0;
  double cad = 0.0;

  void add(double a, double c) {
    ++n;
    asr += a;
    cad += c;
  }
  double mean_asr() const { return asr / n; }
  double mean_cad() const { return cad / n; }
};

int strategy_rank(const std::string& name, const fs::path& source) {
  try {
    return static_cast<int>(strategy_from_string(name));
  } catch (const Error&) {
    throw SchemaError(source.string() + ": unknown strategy '" + name + "'");
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace

std::vector<fs::path> emit_tables(const fs::path& run_dir) {
  std::error_code ec;
  if (!fs::is_directory(run_dir, ec)) {
    throw ArgumentError(run_dir.string() + " is not a directory");
  }
  std::vector<fs::path> runs_files, sweep_files, stats_files;
  for (auto it = fs::recursive_directory_iterator(run_dir, ec);
       it != fs::recursive_directory_iterator(); ++it) {
    if (!it->is_regular_file()) continue;
    const std::string base = it->path().filename().string();
    if (base == "runs.csv") runs_files.push_back(it->path());
    if (base == "sweep.csv") sweep_files.push_back(it->path());
    if (base == "stats.csv") stats_files.push_back(it->path());
  }
  if (ec) throw Error("cannot scan " + run_dir.string() + ": " + ec.message());
  if (runs_files.empty() && sweep_files.empty()) {
    throw DegenerateInputError("no runs.csv or sweep.csv found under " + run_dir.string());
  }
  // Directory iteration order is unspecified; sort for reproducible tables.
  std::sort(runs_files.begin(), runs_files.end());
  std::sort(sweep_files.begin(), sweep_files.end());
  std::sort(stats_files.begin(), stats_files.end());

  const fs::path out_dir = run_dir / "tables";
  fs::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;

  if (!stats_files.empty()) {
    std::vector<std::string> header;
    std::set<std::string> seen;
    std::string body;
    for (const fs::path& path : stats_files) {
      CsvFile file = read_csv(path);
      column(file, "dataset");  // shape check
      if (header.empty()) {
        header = file.header;
      } else if (header != file.header) {
        throw SchemaError(path.string() + " header differs from other stats files");
      }
      for (const auto& row : file.rows) {
        std::string line;
        for (size_t i = 0; i < row.size(); ++i) {
          if (i) line += ',';
          line += row[i];
        }
        if (seen.insert(line).second) body += line + "\n";
      }
    }
    std::string text;
    for (size_t i = 0; i < header.size(); ++i) {
      if (i) text += ',';
      text += header[i];
    }
    text += "\n" + body;
    const fs::path path = out_dir / "dataset_stats.csv";
    write_file(path, text);
    written.push_back(path);
  }

  if (!runs_files.empty()) {
    // (dataset, model) -> per-strategy mean success rate / accuracy drop.
    std::map<std::pair<std::string, std::string>, std::map<int, Agg>> matrix;
    for (const fs::path& path : runs_files) {
      CsvFile file = read_csv(path);
      const int c_dataset = column(file, "dataset");
      const int c_model = column(file, "model");
      const int c_strategy = column(file, "strategy");
      const int c_asr = column(file, "asr");
      const int c_cad = column(file, "cad");
      for (const auto& row : file.rows) {
        const int rank = strategy_rank(cell(file, row, c_strategy), path);
        matrix[{cell(file, row, c_dataset), cell(file, row, c_model)}][rank].add(
            number(file, row, c_asr), number(file, row, c_cad));
      }
    }
    std::string text = "dataset,model";
    for (SelectionStrategy s :
         {SelectionStrategy::Rsa, SelectionStrategy::Mia, SelectionStrategy::Lia}) {
      const std::string n = to_string(s);
      text += "," + n + "_runs," + n + "_asr," + n + "_cad";
    }
    text += "\n";
    for (const auto& [key, by_strategy] : matrix) {
      text += key.first + "," + key.second;
      for (int rank = 0; rank < 3; ++rank) {
        auto it = by_strategy.find(rank);
        if (it == by_strategy.end()) {
          text += ",0,,";
        } else {
          text += "," + std::to_string(it->second.n) + "," +
                  format_double(it->second.mean_asr()) + "," +
                  format_double(it->second.mean_cad());
        }
      }
      text += "\n";
    }
    const fs::path path = out_dir / "asr_cad_matrix.csv";
    write_file(path, text);
    written.push_back(path);
  }

  if (!sweep_files.empty()) {
    // (strategy, trigger-size fraction) -> means, fraction kept as text so
    // the series prints exactly what the sweep wrote.
    std::map<std::pair<int, double>, std::pair<std::string, Agg>> series;
    for (const fs::path& path : sweep_files) {
      CsvFile file = read_csv(path);
      const int c_gamma = column(file, "gamma");
      const int c_strategy = column(file, "strategy");
      const int c_asr = column(file, "asr");
      const int c_cad = column(file, "cad");
      for (const auto& row : file.rows) {
        const int rank = strategy_rank(cell(file, row, c_strategy), path);
        const double gamma = number(file, row, c_gamma);
        auto& entry = series[{rank, gamma}];
        entry.first = cell(file, row, c_gamma);
        entry.second.add(number(file, row, c_asr), number(file, row, c_cad));
      }
    }
    std::string text = "strategy,gamma,runs,mean_asr,mean_cad\n";
    for (const auto& [key, entry] : series) {
      text += to_string(static_cast<SelectionStrategy>(key.first)) + "," + entry.first +
              "," + std::to_string(entry.second.n) + "," +
              format_double(entry.second.mean_asr()) + "," +
              format_double(entry.second.mean_cad()) + "\n";
    }
    const fs::path path = out_dir / "sweep_series.csv";
    write_file(path, text);
    written.push_back(path);
  }
  return written;
}

}  // namespace graphbd
