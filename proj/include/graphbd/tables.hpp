#pragma once

#include <filesystem>
#include <vector>

namespace graphbd {

// Collects every runs.csv / sweep.csv / stats.csv under run_dir (recursively)
// and writes aggregate tables to run_dir/tables:
//   dataset_stats.csv  - deduplicated dataset statistics rows
//   asr_cad_matrix.csv - one row per dataset x model, per-strategy mean
//                        success rate and accuracy drop
//   sweep_series.csv   - mean success rate / accuracy drop per
//                        (trigger-size fraction, strategy)
// Only tables with source data are written; their paths are returned. No
// runs.csv or sweep.csv anywhere raises DegenerateInputError; a source file
// missing an expected column raises SchemaError.
std::vector<std::filesystem::path> emit_tables(const std::filesystem::path& run_dir);

}  // namespace graphbd
