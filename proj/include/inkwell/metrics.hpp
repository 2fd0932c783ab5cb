#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inkwell/core_model.hpp"

namespace inkwell {

// Rows are ground truth, columns the detector's decision.
struct DetectionCounts {
  long healthy_as_healthy = 0;
  long healthy_as_faulty = 0;  // false alarms
  long faulty_as_healthy = 0;  // missed
  long faulty_as_faulty = 0;

  long total() const;
};

struct DetectionMetrics {
  DetectionCounts counts;
  double tdr = 0.0;  // overall accuracy
  double far = 0.0;  // false alarms / healthy
};

DetectionMetrics evaluate_detection(const DetectionCounts& counts);
// Pairs of (truly faulty, flagged faulty).
DetectionMetrics evaluate_detection(std::span<const std::pair<bool, bool>> outcomes);

enum class HmaDefinition {
  MacroF1,             // mean over classes of the per-class F1
  HarmonicMeanRecall,  // harmonic mean of per-class recall
};

struct IsolationMetrics {
  std::vector<FaultVariant> classes;
  Eigen::MatrixXi confusion;  // rows truth, columns predicted
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  double hma = 0.0;
  std::vector<std::string> warnings;
};

// Classes absent from the truth column are left out of the HMA and noted in
// warnings. Throws ValidationError on empty input.
IsolationMetrics evaluate_isolation(std::span<const std::pair<FaultVariant, FaultVariant>> outcomes,
                                    std::span<const FaultVariant> classes,
                                    HmaDefinition definition = HmaDefinition::MacroF1);
IsolationMetrics evaluate_isolation(const Eigen::MatrixXi& confusion,
                                    std::span<const FaultVariant> classes,
                                    HmaDefinition definition = HmaDefinition::MacroF1);

nlohmann::json to_json(const DetectionMetrics& m);
nlohmann::json to_json(const IsolationMetrics& m);

}  // namespace inkwell
