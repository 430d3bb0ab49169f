#pragma once

#include <stdexcept>
#include <string>

namespace graphbd {

// Pipeline phase a failure occurred in. Carried by PhaseError so the CLI can
// map failures to distinct exit codes.
enum class Phase {
  Config,
  Load,
  Split,
  TrainClean,
  Explain,
  Poison,
  TrainBackdoor,
  Evaluate,
  Io,
};

const char* phase_name(Phase p);

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A required dataset file is missing or unreadable.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// Dataset files exist but their contents violate the format.
class MalformedDatasetError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& msg, int epoch)
      : Error(msg), epoch(epoch) {}
  int epoch;
};

class ExplainerDivergedError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class PoisoningFailedError : public Error {
 public:
  using Error::Error;
};

class EvaluationImpossibleError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

// Wraps any Error with the pipeline phase it escaped from.
class PhaseError : public Error {
 public:
  PhaseError(Phase phase, const std::string& msg)
      : Error(std::string("[") + phase_name(phase) + "] " + msg), phase(phase) {}
  Phase phase;
};

}  // namespace graphbd
