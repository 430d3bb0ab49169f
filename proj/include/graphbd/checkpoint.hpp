#pragma once

#include <filesystem>

#include "graphbd/model.hpp"

namespace graphbd {

// Writes a versioned JSON container: model config, task, dimensions, and the
// flat named parameter tensors. Doubles round-trip exactly.
void save_checkpoint(const GnnModel& model, const std::filesystem::path& path);

// Rebuilds a model from a checkpoint. Wrong container format or version, or
// parameters inconsistent with the stored config, raise a schema error.
GnnModel load_checkpoint(const std::filesystem::path& path);

}  // namespace graphbd
