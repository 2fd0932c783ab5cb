#pragma once

// Residual generator built from the left null space of the channel's
// descriptor form.
//
// With x the channel state and y the sensing output, the healthy channel
// obeys H(s) x + L y = 0 with H(s) = H0 + H1 s = [A - sI; C] and L = [0; -1].
// A polynomial row N(s) = sum_k N_k s^k with N(s) H(s) = 0 removes the
// unknown state, and N(s) L y / alpha(s) plus the acquisition-state term is
// the residual. Because N(s) H(s) = 0 forces the state part of N(s) to equal
// N_y(s) C (sI - A)^-1 (N_y the output coefficient of N), the residual is
// computed as the filter N_y(s) / alpha(s) driven by (y_model - y), where
// y_model is the free response of the model from x_a_hat.
//
// The channel coefficients span many decades, so synthesis runs on the
// model in normalized time tau = w_s t with states (V_r, V_n, V_r'/w_s,
// V_n'/w_s), w_s = sqrt(|a31| + |a41|). All polynomials in FilterPolynomials
// are in that variable.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inkwell/core_model.hpp"
#include "inkwell/polynomial.hpp"
#include "inkwell/simulator.hpp"
#include "inkwell/sysid.hpp"

namespace inkwell {

using Matrix54d = Eigen::Matrix<double, 5, 4>;

struct DaeMatrices {
  Matrix54d H0 = Matrix54d::Zero();
  Matrix54d H1 = Matrix54d::Zero();
  Eigen::Matrix<double, 5, 1> L = Eigen::Matrix<double, 5, 1>::Zero();
  std::vector<Matrix54d> F;
  std::vector<FaultVariant> fault_order;
};

// H0 = [A; C], H1 = [-I; 0], L = [0; -1], F_i = [pattern_i; 0] with unit
// entries where fault i may change A.
DaeMatrices assemble_dae(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C,
                         std::span<const FaultSpec> faults);
DaeMatrices assemble_dae(const IdentifiedModel& model, std::span<const FaultSpec> faults);

// Block-banded (5 d_N) x 4 (d_N + 1) matrix with [H0 H1] at block row k,
// block columns k and k + 1.
Eigen::MatrixXd stack_hbar(const DaeMatrices& dae, int order);
// d_N-fold block diagonal of F.
Eigen::MatrixXd stack_fbar(const Matrix54d& F, int order);

struct NullSpaceResult {
  Eigen::RowVectorXd vector;      // left singular vector of the smallest singular value
  int dimension = 0;
  Eigen::MatrixXd basis;          // dimension x rows, orthonormal rows
  Eigen::VectorXd singular_values;
};

// Left null space from the SVD; singular values below rel_tol * sigma_max
// count as zero. Sign is fixed so the first nonzero entry is positive.
// Throws SynthesisError when the null space is empty.
NullSpaceResult left_null_space(const Eigen::MatrixXd& M, double rel_tol = 1e-10);

// Member of the null space with the fewest nonzero trailing blocks,
// obtained by eliminating the top blocks of the basis. Unit norm, sign
// normalized, same length as the basis rows.
Eigen::RowVectorXd minimal_degree_null_vector(const NullSpaceResult& ns, int block_size = 5);

// True for fault i iff ||N_bar F_bar_i||_inf > 1e-6 ||N_bar||_inf.
std::vector<bool> check_sensitivity(const Eigen::RowVectorXd& N_bar, const DaeMatrices& dae,
                                    int order);

enum class FrequencyConvention {
  Angular,  // w_r = 2 pi n_o / T
  Literal,  // w_r = n_o / T
};

double residual_frequency(double oscillations, double window, FrequencyConvention c);

// alpha(s) = (s^2 + w_r^2)(s + w_r)^(d_N - 3), monic, in physical time.
Polynomial design_denominator(int order, double oscillations, double window,
                              FrequencyConvention convention = FrequencyConvention::Angular);

struct FilterPolynomials {
  std::vector<Eigen::RowVectorXd> blocks;  // N_0 .. N_{d_N-1}, each 1x5
  Polynomial alpha;                        // monic
  double omega_r = 0.0;                    // [rad/s]
  double time_scale = 1.0;                 // w_s [1/s]
  int order = 0;
  int null_dimension = 0;

  Eigen::RowVectorXd stacked() const;
  // Output coefficient N_y(s) = sum_k N_k(4) s^k.
  Polynomial output_numerator() const;
  // N(s) L(s) = -N_y(s).
  Polynomial y_numerator() const { return output_numerator().scaled(-1.0); }
  // Blocks in physical units: N_k diag(1, 1, 1/w_s, 1/w_s, 1) w_s^-k.
  Eigen::RowVectorXd physical_stacked() const;
};

struct DiscreteRealization {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x 2, inputs (y, y_model)
  Eigen::MatrixXd C;  // 1 x n
  Eigen::MatrixXd D;  // 1 x 2

  int dimension() const { return static_cast<int>(A.rows()); }
  // Transfer from the y input at z = e^{i w dt}.
  std::complex<double> y_response(double omega, double dt) const;
};

// Zero-order-hold realization of G_y(s) = N(s) L / alpha(s) at step dt,
// with the y_model input carrying -G_y. When alpha has a pair of roots at
// +-i w_r (w_r = omega_r / time_scale in the polynomial variable), that pair
// is realized as an exact rotation by w_r dt. Throws SynthesisError when
// deg N_y >= deg alpha.
DiscreteRealization realize_filter(const FilterPolynomials& polys, double dt);

// Continuous G_y(i w) in physical frequency.
std::complex<double> continuous_y_response(const FilterPolynomials& polys, double omega);

struct ResidualFilter {
  FilterPolynomials polys;
  DiscreteRealization realization;
  Eigen::Vector4d x_a_hat = Eigen::Vector4d::Zero();
  double dt = 0.0;
  // Model free response in normalized coordinates: y_model[k] =
  // model_output * model_transition^k * model_state.
  Eigen::Matrix4d model_transition = Eigen::Matrix4d::Zero();
  Eigen::RowVector4d model_output = Eigen::RowVector4d::Zero();
  Eigen::Vector4d model_state = Eigen::Vector4d::Zero();
  std::vector<FaultVariant> fault_order;
  std::vector<bool> sensitive;

  Signal model_signal(double t_a, std::size_t n) const;
};

void to_json(nlohmann::json& j, const ResidualFilter& f);
void from_json(const nlohmann::json& j, ResidualFilter& f);
std::string filter_digest(const ResidualFilter& f);

enum class DetectionStatistic { Energy, PeakAbs };

struct FilterConfig {
  int order = 5;
  double oscillations = 8.0;
  double window = 0.0;  // [s]; 0 means the model grid length n dt
  double mu = 1.0;
  FrequencyConvention convention = FrequencyConvention::Angular;
  DetectionStatistic statistic = DetectionStatistic::Energy;

  void validate() const;
};

void to_json(nlohmann::json& j, const FilterConfig& c);
void from_json(const nlohmann::json& j, FilterConfig& c);

// assemble -> stack -> null space -> denominator -> realize, for all six
// fault patterns. Insensitive faults are reported in `sensitive`.
ResidualFilter synthesize_filter(const IdentifiedModel& model, const FilterConfig& cfg = {});

// Normalized (A, C) used for synthesis and the scale w_s.
struct NormalizedModel {
  Eigen::Matrix4d A;
  Eigen::RowVector4d C;
  double time_scale;
};
NormalizedModel normalize_model(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C);

// Throws ValidationError when the grids differ.
Signal compute_residual(const ResidualFilter& f, const Signal& s);

// sum_k r[k]^2 dt
double residual_energy(const Signal& r);
double residual_statistic(const Signal& r, DetectionStatistic statistic);

// mu * max statistic over the healthy residuals.
double calibrate_threshold(std::span<const Signal> healthy_residuals, double mu,
                           DetectionStatistic statistic = DetectionStatistic::Energy);

struct DetectionResult {
  double energy = 0.0;
  double threshold = 0.0;
  bool is_faulty = false;
};

DetectionResult detect(double energy, double threshold);

}  // namespace inkwell
