#pragma once

#include <stdexcept>
#include <string>

namespace inkwell {

// Base class for every error thrown by the library. `stage()` names the
// pipeline stage for the CLI's machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& what)
      : std::runtime_error(what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

// Invalid parameters, configs or file contents.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error("validation", what) {}
};

class SimulationError : public Error {
 public:
  explicit SimulationError(const std::string& what) : Error("simulate", what) {}
};

class SynthesisError : public Error {
 public:
  explicit SynthesisError(const std::string& what) : Error("fd-design", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace inkwell
