#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inkwell/fd_filter.hpp"
#include "inkwell/fi_classifier.hpp"
#include "inkwell/metrics.hpp"
#include "inkwell/simulator.hpp"
#include "inkwell/sysid.hpp"

namespace inkwell {

enum class IsolationInput { Residual, Output };

std::string_view to_string(IsolationInput i);   // "r", "y"
std::string_view to_string(IsolationMethod m);  // "lr", "knn"
IsolationInput parse_isolation_input(std::string_view s);
IsolationMethod parse_isolation_method(std::string_view s);

struct IsolationConfig {
  IsolationMethod method = IsolationMethod::LR;
  int k = 1;
  IsolationInput input = IsolationInput::Residual;
  double training_fraction = 1.0;
  // Faulty-only training corpus, classes assigned round-robin.
  int training_size = 2025;
  std::vector<IsolationMethod> grid_methods{IsolationMethod::LR, IsolationMethod::KNN};
  std::vector<IsolationInput> grid_inputs{IsolationInput::Residual, IsolationInput::Output};
  std::vector<double> grid_fractions{1.0, 0.5, 0.1};

  void validate() const;
};

struct ExperimentConfig {
  GenerationConfig generation = GenerationConfig::defaults();
  std::uint64_t train_seed = 11;
  std::uint64_t test_seed = 22;
  std::uint64_t isolation_seed = 33;
  SysIdConfig sysid;
  FilterConfig filter;
  IsolationConfig isolation;
  std::filesystem::path output_dir = "inkwell-out";

  void validate() const;
  std::string digest() const;
};

void to_json(nlohmann::json& j, const IsolationConfig& c);
void from_json(const nlohmann::json& j, IsolationConfig& c);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct IsolationCell {
  double training_fraction = 1.0;
  int training_size = 0;
  IsolationInput input = IsolationInput::Residual;
  IsolationMethod method = IsolationMethod::LR;
  IsolationMetrics metrics;
};

struct ExperimentReport {
  DetectionMetrics detection;
  double threshold = 0.0;
  std::optional<IsolationCell> primary;  // the configured (method, input, fraction)
  std::vector<IsolationCell> cells;      // fraction x input x method
  std::string isolation_skipped;         // reason, empty when isolation ran
  nlohmann::json provenance;

  nlohmann::json to_json() const;
};

// Faulty-only isolation corpus of `size` signals; entry i has class
// kFaultVariants[i % 6].
LabeledDataset generate_isolation_corpus(const GenerationConfig& base, std::uint64_t seed, int size);

// Number of corpus entries used at a training fraction: ceil(fraction * size).
int training_count(double fraction, int size);

// Residuals of every entry, labels kept.
LabeledDataset residual_dataset(const ResidualFilter& f, const LabeledDataset& ds);

// generate -> identify -> design -> detect -> isolate -> report. Writes all
// artifacts under cfg.output_dir as they are produced; report.json last.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace inkwell
