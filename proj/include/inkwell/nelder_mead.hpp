#pragma once

#include <functional>

#include <Eigen/Dense>

namespace inkwell {

struct NelderMeadOptions {
  int max_evaluations = 5000;
  // Converged once every vertex lies within x_tolerance (max-norm) of the
  // best vertex and their objective values differ by at most
  // f_tolerance * max(|f_best|, f_floor).
  double x_tolerance = 1e-8;
  double f_tolerance = 1e-10;
  double f_floor = 1e-300;
  // Initial simplex: x0 + step(i) e_i.
  Eigen::VectorXd initial_step;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization with the dimension-adaptive
// coefficients of Gao and Han (2012).
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& objective,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& options);

}  // namespace inkwell
