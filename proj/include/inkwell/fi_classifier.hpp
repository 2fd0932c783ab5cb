#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inkwell/core_model.hpp"
#include "inkwell/errors.hpp"
#include "inkwell/simulator.hpp"

namespace inkwell {

// Column i is the mean residual of class class_order[i].
struct TemplateMatrix {
  Eigen::MatrixXd R;
  std::vector<FaultVariant> class_order;
  SampleGrid grid;

  int classes() const { return static_cast<int>(R.cols()); }
};

TemplateMatrix train_templates(const std::map<FaultVariant, std::vector<Signal>>& by_class);
// Groups the non-healthy entries of a labeled residual set by class.
TemplateMatrix train_templates(const LabeledDataset& residuals);

// CSV with one column per class (header = class names), one row per sample.
std::string templates_csv(const TemplateMatrix& t);
TemplateMatrix parse_templates_csv(const std::string& text, const SampleGrid& grid);
nlohmann::json templates_metadata(const TemplateMatrix& t);

class SolverError : public Error {
 public:
  SolverError(const std::string& what, Eigen::VectorXd best)
      : Error("isolate", what), best_(std::move(best)) {}
  const Eigen::VectorXd& best() const { return best_; }

 private:
  Eigen::VectorXd best_;
};

struct SimplexLsResult {
  Eigen::VectorXd phi;
  double objective = 0.0;  // ||R phi - r||^2
  int iterations = 0;
};

// argmin ||R phi - r||_2 over the probability simplex, by a primal active-set
// method on the Gram matrix. Throws SolverError if the iteration cap is hit.
SimplexLsResult solve_simplex_ls(const Eigen::MatrixXd& R, const Eigen::VectorXd& r);
Eigen::VectorXd solve_simplex_ls(const TemplateMatrix& t, const Signal& r);

// Largest violation of the KKT conditions of the simplex problem at phi:
// stationarity on the support and dual feasibility off it.
double simplex_kkt_residual(const Eigen::MatrixXd& R, const Eigen::VectorXd& r,
                            const Eigen::VectorXd& phi);

enum class IsolationMethod { LR, KNN };

struct IsolationResult {
  Eigen::VectorXd phi;
  FaultVariant winner = FaultVariant::Healthy;
  IsolationMethod method = IsolationMethod::LR;
};

// Index of the largest entry; the lowest index wins ties.
Eigen::Index argmax_lowest(const Eigen::VectorXd& v);

IsolationResult isolate_lr(const TemplateMatrix& t, const Signal& r);

// Nearest neighbour on raw sample vectors (Euclidean distance).
class KnnClassifier {
 public:
  KnnClassifier() = default;
  // Throws ValidationError on an empty corpus or mixed grids.
  explicit KnnClassifier(std::span<const LabeledSignal> train);

  std::size_t size() const { return labels_.size(); }
  const std::vector<FaultVariant>& class_order() const { return class_order_; }

  // Majority vote over the k nearest; ties go to the class with the smaller
  // summed distance, then to the lower class index. phi holds vote shares.
  IsolationResult isolate(const Signal& r, int k) const;

 private:
  Eigen::MatrixXd samples_;  // one column per training signal
  std::vector<FaultVariant> labels_;
  std::vector<FaultVariant> class_order_;
};

IsolationResult isolate_knn(std::span<const LabeledSignal> train, const Signal& r, int k);

}  // namespace inkwell
