#pragma once

#include <Eigen/Dense>

namespace inkwell {

// Diagonal similarity D with powers-of-two entries such that D^{-1} M D has
// rows and columns of comparable norm (Parlett-Reinsch balancing). Applying
// it is exact in floating point.
Eigen::VectorXd balancing_scales(const Eigen::MatrixXd& m);

// Matrix exponential of a possibly badly scaled matrix: balance, take the
// Pade exponential, undo the similarity.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m);

// Zero-order-hold discretization of (A, B) over step h:
// returns {exp(A h), integral_0^h exp(A s) ds B}.
struct ZohPair {
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;
};
ZohPair zoh_discretize(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double h);

// Induced infinity norm (max absolute row sum).
double inf_norm(const Eigen::MatrixXd& m);

// Largest absolute entry.
double max_abs(const Eigen::MatrixXd& m);

}  // namespace inkwell
