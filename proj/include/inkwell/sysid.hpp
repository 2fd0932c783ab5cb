#pragma once

#include <cstddef>
#include <span>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "inkwell/errors.hpp"
#include "inkwell/simulator.hpp"

namespace inkwell {

// The four free entries of the structured state matrix, stored as the
// positive magnitudes: A(3,1) = A(3,2) = -restrictor_coupling,
// A(3,3) = -restrictor_damping, A(4,1) = A(4,2) = -nozzle_coupling,
// A(4,4) = -nozzle_damping.
struct ChannelCoefficients {
  double restrictor_coupling = 0.0;
  double restrictor_damping = 0.0;
  double nozzle_coupling = 0.0;
  double nozzle_damping = 0.0;

  Eigen::Matrix4d state_matrix() const;
  static ChannelCoefficients from_state_matrix(const Eigen::Matrix4d& A);
  static ChannelCoefficients reference();  // 4.33e11, 1.59e5, 6.17e11, 1.75e5
};

enum class FitLoss { L1, Squared };

struct IdentifiedModel {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::RowVector4d C{0.0, 0.0, 1.0, 1.0};
  Eigen::Vector4d x_a_hat = Eigen::Vector4d::Zero();
  double fit_residual = 0.0;
  FitLoss loss = FitLoss::L1;
  SampleGrid grid;

  ChannelCoefficients coefficients() const { return ChannelCoefficients::from_state_matrix(A); }
  // Model output C exp(A k dt) x_a_hat on the model grid.
  Signal predicted() const;
  void validate() const;

  // The reference identified channel with its acquisition state.
  static IdentifiedModel reference(const SampleGrid& grid = {});
};

void to_json(nlohmann::json& j, const IdentifiedModel& m);
void from_json(const nlohmann::json& j, IdentifiedModel& m);

class IdentificationError : public Error {
 public:
  IdentificationError(const std::string& what, IdentifiedModel best)
      : Error("identify", what), best_(std::move(best)) {}
  const IdentifiedModel& best() const { return best_; }

 private:
  IdentifiedModel best_;
};

struct SysIdConfig {
  FitLoss loss = FitLoss::L1;
  // Log-spaced multi-start grid per coefficient.
  int grid_points = 4;
  double coupling_min = 1e10;
  double coupling_max = 1e13;
  double damping_min = 1e4;
  double damping_max = 1e6;
  // Grid points refined with Nelder-Mead in the least-squares stage.
  int refine_starts = 6;
  int max_evaluations = 4000;
  double x_tolerance = 1e-7;
  double f_tolerance = 1e-9;
  // Signals beyond this count are ignored (0 = use all).
  std::size_t max_signals = 0;
};

void to_json(nlohmann::json& j, const SysIdConfig& c);
void from_json(const nlohmann::json& j, SysIdConfig& c);

// Objective value of a candidate on the given signals: the rectangle-rule
// integral of |y - y_model| (L1) or (y - y_model)^2 (Squared), summed over
// signals.
double fit_objective(const IdentifiedModel& candidate, std::span<const Signal> signals,
                     FitLoss loss);

// Estimates (A, x_a_hat) with C = (0, 0, 1, 1). A least-squares stage
// projects out the acquisition state and searches the coefficient grid,
// then a simplex search over all parameters minimizes the configured loss.
// Throws IdentificationError carrying the best model if the final search
// does not converge.
IdentifiedModel identify(std::span<const Signal> signals, const SysIdConfig& cfg = {});

}  // namespace inkwell
