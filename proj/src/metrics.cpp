#include "inkwell/metrics.hpp"

#include <algorithm>

#include "inkwell/errors.hpp"

namespace inkwell {

long DetectionCounts::total() const {
  return healthy_as_healthy + healthy_as_faulty + faulty_as_healthy + faulty_as_faulty;
}

DetectionMetrics evaluate_detection(const DetectionCounts& c) {
  if (c.total() <= 0) throw ValidationError("detection evaluation needs at least one outcome");
  DetectionMetrics m;
  m.counts = c;
  m.tdr = static_cast<double>(c.healthy_as_healthy + c.faulty_as_faulty) /
          static_cast<double>(c.total());
  const long healthy = c.healthy_as_healthy + c.healthy_as_faulty;
  m.far = healthy == 0 ? 0.0 : static_cast<double>(c.healthy_as_faulty) / static_cast<double>(healthy);
  return m;
}

DetectionMetrics evaluate_detection(std::span<const std::pair<bool, bool>> outcomes) {
  DetectionCounts c;
  for (const auto& [truth, flagged] : outcomes) {
    if (truth) {
      ++(flagged ? c.faulty_as_faulty : c.faulty_as_healthy);
    } else {
      ++(flagged ? c.healthy_as_faulty : c.healthy_as_healthy);
    }
  }
  return evaluate_detection(c);
}

IsolationMetrics evaluate_isolation(const Eigen::MatrixXi& confusion,
                                    std::span<const FaultVariant> classes,
                                    HmaDefinition definition) {
  const auto n = static_cast<Eigen::Index>(classes.size());
  if (confusion.rows() != n || confusion.cols() != n) {
    throw ValidationError("confusion matrix does not match the class list");
  }
  if (confusion.sum() <= 0) throw ValidationError("isolation evaluation needs at least one outcome");

  IsolationMetrics m;
  m.classes.assign(classes.begin(), classes.end());
  m.confusion = confusion;
  std::vector<double> scores;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tp = confusion(i, i);
    const double truth = confusion.row(i).sum();
    const double predicted = confusion.col(i).sum();
    const double p = predicted > 0 ? tp / predicted : 0.0;
    const double r = truth > 0 ? tp / truth : 0.0;
    m.precision.push_back(p);
    m.recall.push_back(r);
    m.f1.push_back(p + r > 0 ? 2.0 * p * r / (p + r) : 0.0);
    if (truth == 0) {
      m.warnings.push_back("class " + std::string(to_string(classes[static_cast<std::size_t>(i)])) +
                           " is absent from the ground truth and excluded from HMA");
      continue;
    }
    scores.push_back(definition == HmaDefinition::MacroF1 ? m.f1.back() : r);
  }
  if (scores.empty()) {
    m.hma = 0.0;
  } else if (definition == HmaDefinition::MacroF1) {
    double s = 0.0;
    for (double v : scores) s += v;
    m.hma = s / static_cast<double>(scores.size());
  } else {
    double inv = 0.0;
    bool zero = false;
    for (double v : scores) {
      if (v == 0.0) zero = true;
      inv += zero ? 0.0 : 1.0 / v;
    }
    m.hma = zero ? 0.0 : static_cast<double>(scores.size()) / inv;
  }
  return m;
}

IsolationMetrics evaluate_isolation(std::span<const std::pair<FaultVariant, FaultVariant>> outcomes,
                                    std::span<const FaultVariant> classes,
                                    HmaDefinition definition) {
  if (outcomes.empty()) throw ValidationError("isolation evaluation needs at least one outcome");
  const auto n = static_cast<Eigen::Index>(classes.size());
  Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(n, n);
  auto index_of = [&](FaultVariant v) {
    const auto it = std::find(classes.begin(), classes.end(), v);
    if (it == classes.end()) {
      throw ValidationError("label " + std::string(to_string(v)) + " is not in the class list");
    }
    return static_cast<Eigen::Index>(it - classes.begin());
  };
  for (const auto& [truth, predicted] : outcomes) ++confusion(index_of(truth), index_of(predicted));
  return evaluate_isolation(confusion, classes, definition);
}

nlohmann::json to_json(const DetectionMetrics& m) {
  return nlohmann::json{
      {"confusion",
       {{"Healthy", {{"Healthy", m.counts.healthy_as_healthy}, {"Faulty", m.counts.healthy_as_faulty}}},
        {"Faulty", {{"Healthy", m.counts.faulty_as_healthy}, {"Faulty", m.counts.faulty_as_faulty}}}}},
      {"TDR", m.tdr},
      {"FAR", m.far}};
}

nlohmann::json to_json(const IsolationMetrics& m) {
  std::vector<std::string> names;
  for (FaultVariant v : m.classes) names.emplace_back(to_string(v));
  nlohmann::json confusion = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.confusion.rows(); ++i) {
    std::vector<int> row;
    for (Eigen::Index j = 0; j < m.confusion.cols(); ++j) row.push_back(m.confusion(i, j));
    confusion.push_back(row);
  }
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t i = 0; i < names.size(); ++i) {
    per_class[names[i]] = {{"precision", m.precision[i]}, {"recall", m.recall[i]}, {"f1", m.f1[i]}};
  }
  return nlohmann::json{{"classes", names},     {"confusion", confusion}, {"per_class", per_class},
                        {"HMA", m.hma},         {"warnings", m.warnings}};
}

}  // namespace inkwell
