#include "inkwell/fd_filter.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "inkwell/errors.hpp"
#include "inkwell/linalg.hpp"

namespace inkwell {
namespace {

const SampleGrid kGrid{0.0, 1e-7, 500};

std::vector<FaultSpec> AllFaults() {
  std::vector<FaultSpec> out;
  for (FaultVariant v : kFaultVariants) out.push_back(FaultSpec::default_for(v));
  return out;
}

Signal Simulate(const Eigen::Matrix4d& A, const Eigen::Vector4d& x) {
  return simulate_autonomous(A, Eigen::RowVector4d(0, 0, 1, 1), x, kGrid.t_a, kGrid.dt, kGrid.n);
}

GTEST_TEST(AssembleDae, BlocksAndPatterns) {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const std::vector<FaultSpec> faults = AllFaults();
  const DaeMatrices dae = assemble_dae(m, faults);
  EXPECT_EQ(dae.H0.topRows<4>(), m.A);
  EXPECT_EQ(dae.H0.row(4), m.C);
  EXPECT_EQ(dae.H1.topRows<4>(), -Eigen::Matrix4d::Identity());
  EXPECT_TRUE(dae.H1.row(4).isZero(0.0));
  EXPECT_EQ(dae.L(4), -1.0);
  ASSERT_EQ(dae.F.size(), 6u);
  EXPECT_EQ(dae.F[0].topRows<4>(), fault_pattern(FaultVariant::EC));
  EXPECT_EQ(dae.fault_order[5], FaultVariant::DDN);
}

GTEST_TEST(StackHbar, BandStructure) {
  const NormalizedModel nm = normalize_model(IdentifiedModel::reference().A, Eigen::RowVector4d(0, 0, 1, 1));
  const DaeMatrices dae = assemble_dae(nm.A, nm.C, {});
  const Eigen::MatrixXd H = stack_hbar(dae, 3);
  ASSERT_EQ(H.rows(), 15);
  ASSERT_EQ(H.cols(), 16);
  EXPECT_EQ(Eigen::MatrixXd(H.block(5, 4, 5, 4)), Eigen::MatrixXd(dae.H0));
  EXPECT_EQ(Eigen::MatrixXd(H.block(5, 8, 5, 4)), Eigen::MatrixXd(dae.H1));
  EXPECT_TRUE(H.block(0, 8, 5, 8).isZero(0.0));
  EXPECT_THROW(stack_hbar(dae, 0), ValidationError);
  const Eigen::MatrixXd F = stack_fbar(Matrix54d::Ones(), 2);
  EXPECT_EQ(F.rows(), 10);
  EXPECT_EQ(F.cols(), 8);
  EXPECT_TRUE(F.block(0, 4, 5, 4).isZero(0.0));
}

GTEST_TEST(NormalizeModel, SimilarityAndScale) {
  const Eigen::Matrix4d A = IdentifiedModel::reference().A;
  const NormalizedModel nm = normalize_model(A, Eigen::RowVector4d(0, 0, 1, 1));
  EXPECT_NEAR(nm.time_scale, std::sqrt(4.33e11 + 6.17e11), 1e-9);
  EXPECT_NEAR(nm.A(2, 0) + nm.A(3, 0), -1.0, 1e-15);
  EXPECT_EQ(nm.C, Eigen::RowVector4d(0, 0, 1, 1));
  // Eigenvalues scale by 1 / w_s; the product of the three nonzero ones is
  // a q + b p in physical units.
  const Eigen::Vector4cd e1 = nm.A.eigenvalues();
  double prod1 = 1.0;
  for (int i = 0; i < 4; ++i)
    if (std::abs(e1(i)) > 1e-6) prod1 *= std::abs(e1(i));
  const double prod0 = 4.33e11 * 1.75e5 + 6.17e11 * 1.59e5;
  EXPECT_NEAR(prod1 * std::pow(nm.time_scale, 3), prod0, 1e-9 * prod0);
}

// N(s) H(s) = 0 means N_x(s) (sI - A) = N_y(s) C; checked at sample points.
GTEST_TEST(NullSpace, AnnihilatesStateAtSamplePoints) {
  const NormalizedModel nm = normalize_model(IdentifiedModel::reference().A, Eigen::RowVector4d(0, 0, 1, 1));
  const std::vector<FaultSpec> faults = AllFaults();
  const DaeMatrices dae = assemble_dae(nm.A, nm.C, faults);
  const int order = 5;
  const Eigen::MatrixXd H = stack_hbar(dae, order);
  const NullSpaceResult ns = left_null_space(H);
  EXPECT_EQ(ns.dimension, 2);
  EXPECT_LE(inf_norm(ns.vector * H), 1e-12 * inf_norm(ns.vector) * inf_norm(H));

  const Eigen::RowVectorXd n = minimal_degree_null_vector(ns);
  EXPECT_NEAR(n.norm(), 1.0, 1e-14);
  EXPECT_LE(inf_norm(n * H), 1e-12 * inf_norm(n) * inf_norm(H));
  // Degree 3: the last block vanishes.
  EXPECT_TRUE(n.tail(5).isZero(1e-12));
  EXPECT_GT(std::abs(n(5 * 3 + 4)), 1e-3);

  for (const std::complex<double> s : {std::complex<double>(0.3, 0.0), {-0.2, 1.1}, {0.0, 2.5}}) {
    Eigen::RowVector4cd nx = Eigen::RowVector4cd::Zero();
    std::complex<double> ny = 0.0;
    std::complex<double> p = 1.0;
    for (int k = 0; k < order; ++k) {
      nx += p * n.segment<4>(5 * k).cast<std::complex<double>>();
      ny += p * n(5 * k + 4);
      p *= s;
    }
    const Eigen::Matrix4cd sIA = s * Eigen::Matrix4cd::Identity() - nm.A.cast<std::complex<double>>();
    const Eigen::RowVector4cd lhs = nx * sIA;
    const Eigen::RowVector4cd rhs = ny * nm.C.cast<std::complex<double>>();
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * (1.0 + rhs.norm())) << s;
  }
}

// The output coefficient of the minimal null vector is the characteristic
// polynomial of the observable modes (three of the four eigenvalues; the
// fourth mode V_r - V_n is unobservable).
GTEST_TEST(NullSpace, OutputPolynomialIsObservableCharacteristic) {
  const ResidualFilter f = synthesize_filter(IdentifiedModel::reference(kGrid));
  const Polynomial ny = f.polys.output_numerator();
  ASSERT_EQ(ny.degree(), 3);
  const double ws = f.polys.time_scale;
  const double a = 4.33e11, p = 1.59e5, b = 6.17e11, q = 1.75e5;
  const std::vector<double> expected{(a * q + b * p) / (ws * ws * ws), (p * q + a + b) / (ws * ws),
                                     (p + q) / ws, 1.0};
  for (int i = 0; i < 4; ++i) {
    EXPECT_NEAR(ny.coefficients()[static_cast<std::size_t>(i)] / ny.leading(),
                expected[static_cast<std::size_t>(i)], 1e-9)
        << i;
  }
}

GTEST_TEST(NullSpace, EmptyAtLowOrder) {
  const NormalizedModel nm = normalize_model(IdentifiedModel::reference().A, Eigen::RowVector4d(0, 0, 1, 1));
  const DaeMatrices dae = assemble_dae(nm.A, nm.C, {});
  EXPECT_THROW(left_null_space(stack_hbar(dae, 1)), SynthesisError);
  try {
    left_null_space(stack_hbar(dae, 1));
  } catch (const SynthesisError& e) {
    EXPECT_NE(std::string(e.what()).find("d_N"), std::string::npos);
    EXPECT_EQ(e.stage(), "fd-design");
  }
}

GTEST_TEST(Sensitivity, AllFaultsVisible) {
  const ResidualFilter f = synthesize_filter(IdentifiedModel::reference(kGrid));
  ASSERT_EQ(f.sensitive.size(), 6u);
  for (bool s : f.sensitive) EXPECT_TRUE(s);
}

GTEST_TEST(Sensitivity, ZeroPatternIsInsensitive) {
  const NormalizedModel nm = normalize_model(IdentifiedModel::reference().A, Eigen::RowVector4d(0, 0, 1, 1));
  DaeMatrices dae = assemble_dae(nm.A, nm.C, {});
  dae.F.push_back(Matrix54d::Zero());
  const NullSpaceResult ns = left_null_space(stack_hbar(dae, 5));
  EXPECT_FALSE(check_sensitivity(ns.vector, dae, 5)[0]);
}

GTEST_TEST(Denominator, RootsAndConventions) {
  const double T = 5e-5;
  const double w = 2.0 * std::numbers::pi * 8.0 / T;
  EXPECT_DOUBLE_EQ(residual_frequency(8.0, T, FrequencyConvention::Angular), w);
  EXPECT_DOUBLE_EQ(residual_frequency(8.0, T, FrequencyConvention::Literal), 8.0 / T);

  const Polynomial alpha = design_denominator(5, 8.0, T);
  EXPECT_EQ(alpha.degree(), 4);
  EXPECT_EQ(alpha.leading(), 1.0);
  EXPECT_LT(std::abs(alpha(std::complex<double>(0.0, w))), 1e-9 * std::pow(w, 4));
  EXPECT_LT(std::abs(alpha(-w)), 1e-9 * std::pow(w, 4));
  // Double root at -w: the derivative vanishes there as well.
  const double h = 1e-6 * w;
  EXPECT_LT(std::abs(alpha(-w + h) - alpha(-w - h)) / (2 * h), 1e-6 * std::pow(w, 3));

  EXPECT_EQ(design_denominator(3, 8.0, T).degree(), 2);
  EXPECT_THROW(design_denominator(2, 8.0, T), SynthesisError);
  EXPECT_THROW(design_denominator(5, 0.5, T), ValidationError);
}

// G(s) = 1 / (s + 1) driven by a unit step on the y input: the ZOH sampled
// response is 1 - exp(-k h).
GTEST_TEST(RealizeFilter, FirstOrderStepResponse) {
  FilterPolynomials polys;
  polys.blocks = {Eigen::RowVectorXd::Zero(5)};
  polys.blocks[0](4) = -1.0;  // N_y = -1, so N(s) L = 1
  polys.alpha = Polynomial({1.0, 1.0});
  polys.time_scale = 1.0;
  polys.order = 1;
  const double h = 0.1;
  const DiscreteRealization d = realize_filter(polys, h);
  ASSERT_EQ(d.dimension(), 1);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(1);
  for (int k = 0; k < 30; ++k) {
    const double r = (d.C * z)(0, 0);
    EXPECT_NEAR(r, 1.0 - std::exp(-k * h), 1e-14) << k;
    z = d.A * z + d.B.col(0);
  }
  // The model input carries the opposite sign.
  EXPECT_EQ(d.B.col(1), -d.B.col(0));
  EXPECT_TRUE(d.D.isZero(0.0));
}

GTEST_TEST(RealizeFilter, RejectsImproper) {
  FilterPolynomials polys;
  polys.blocks = {Eigen::RowVectorXd::Zero(5), Eigen::RowVectorXd::Zero(5)};
  polys.blocks[1](4) = 1.0;
  polys.alpha = Polynomial({1.0, 1.0});
  polys.time_scale = 1.0;
  EXPECT_THROW(realize_filter(polys, 0.1), SynthesisError);
}

GTEST_TEST(RealizeFilter, MarginalPairOnUnitCircle) {
  const ResidualFilter f = synthesize_filter(IdentifiedModel::reference(kGrid));
  const Eigen::VectorXcd ev = f.realization.A.eigenvalues();
  int on_circle = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(std::abs(ev(i)) - 1.0) <= 1e-12) ++on_circle;
    else EXPECT_LT(std::abs(ev(i)), 1.0);
  }
  EXPECT_EQ(on_circle, 2);
  // The pair sits at angle w_r dt.
  double angle = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) angle = std::max(angle, std::arg(ev(i)));
  EXPECT_NEAR(angle, f.polys.omega_r * kGrid.dt, 1e-12);
}

GTEST_TEST(RealizeFilter, FrequencyResponseMatchesContinuous) {
  const ResidualFilter f = synthesize_filter(IdentifiedModel::reference(kGrid));
  const double dt = kGrid.dt;
  for (int i = 1; i <= 200; ++i) {
    const double w = 0.1 / dt * i / 200.0;
    if (std::abs(w - f.polys.omega_r) < 1e-3 * f.polys.omega_r) continue;
    const std::complex<double> hd = f.realization.y_response(w, dt);
    const std::complex<double> hc = continuous_y_response(f.polys, w);
    EXPECT_LT(std::abs(std::abs(hd) / std::abs(hc) - 1.0), 0.01) << w;
    // Up to the half-sample delay of the hold.
    const std::complex<double> delay = std::exp(std::complex<double>(0.0, -0.5 * w * dt));
    EXPECT_LT(std::abs(hd / (hc * delay) - 1.0), 0.01) << w;
  }
}

GTEST_TEST(ComputeResidual, HealthyNoiseFreeIsNull) {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const Signal y = Simulate(m.A, m.x_a_hat);
  const Signal r = compute_residual(f, y);
  ASSERT_EQ(r.size(), y.size());
  EXPECT_LE(r.peak(), 1e-6 * y.peak());
}

GTEST_TEST(ComputeResidual, ModelSignalMatchesSimulator) {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const Signal a = f.model_signal(0.0, 500);
  const Signal b = Simulate(m.A, m.x_a_hat);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_NEAR(a.samples[k], b.samples[k], 1e-9 * b.peak());
}

GTEST_TEST(ComputeResidual, FaultsRaiseEnergy) {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const SystemMatrices base = build_system_matrices(ChannelParams::reference());
  for (FaultVariant v : kFaultVariants) {
    const Signal y = Simulate(faulted_dynamics(base, FaultSpec::default_for(v)), m.x_a_hat);
    EXPECT_GT(residual_energy(compute_residual(f, y)), 1e-3) << to_string(v);
  }
}

// Residual = G applied to (y_model - y); checked against direct convolution
// with the filter's impulse response.
GTEST_TEST(ComputeResidual, LinearInOutputError) {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const SystemMatrices base = build_system_matrices(ChannelParams::reference());
  const Signal y = Simulate(faulted_dynamics(base, FaultSpec::default_for(FaultVariant::PBN)), m.x_a_hat);
  const Signal y_model = f.model_signal(0.0, y.size());
  const Signal r = compute_residual(f, y);

  const DiscreteRealization& d = f.realization;
  std::vector<double> impulse(y.size(), 0.0);
  Eigen::VectorXd z = d.B.col(0);
  for (std::size_t k = 1; k < y.size(); ++k) {
    impulse[k] = (d.C * z)(0, 0);
    z = d.A * z;
  }
  for (std::size_t k = 0; k < y.size(); k += 37) {
    double acc = 0.0;
    for (std::size_t j = 0; j <= k; ++j) acc += impulse[k - j] * (y.samples[j] - y_model.samples[j]);
    EXPECT_NEAR(r.samples[k], acc, 1e-9 * (1.0 + std::abs(acc))) << k;
  }
}

GTEST_TEST(ComputeResidual, RejectsGridMismatch) {
  const ResidualFilter f = synthesize_filter(IdentifiedModel::reference(kGrid));
  Signal s;
  s.dt = 2e-7;
  s.samples.assign(10, 0.0);
  EXPECT_THROW(compute_residual(f, s), ValidationError);
}

GTEST_TEST(Detection, EnergyAndThreshold) {
  Signal r;
  r.dt = 0.5;
  r.samples = {1.0, -2.0, 3.0};
  EXPECT_DOUBLE_EQ(residual_energy(r), 14.0 * 0.5);
  EXPECT_DOUBLE_EQ(residual_statistic(r, DetectionStatistic::PeakAbs), 3.0);

  Signal q = r;
  q.samples = {0.5, 0.5, 0.5};
  const std::vector<Signal> healthy{r, q};
  EXPECT_DOUBLE_EQ(calibrate_threshold(healthy, 1.0), 7.0);
  EXPECT_DOUBLE_EQ(calibrate_threshold(healthy, 1.5), 10.5);
  EXPECT_DOUBLE_EQ(calibrate_threshold(healthy, 2.0, DetectionStatistic::PeakAbs), 6.0);
  EXPECT_THROW(calibrate_threshold(std::vector<Signal>{}, 1.0), ValidationError);
  EXPECT_THROW(calibrate_threshold(healthy, 0.0), ValidationError);

  EXPECT_FALSE(detect(7.0, 7.0).is_faulty);
  EXPECT_TRUE(detect(7.0 + 1e-12, 7.0).is_faulty);
  EXPECT_FALSE(detect(0.0, 0.0).is_faulty);
  EXPECT_THROW(detect(-1.0, 1.0), ValidationError);
}

GTEST_TEST(ResidualFilter, JsonRoundTripPreservesResiduals) {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const nlohmann::json j = f;
  EXPECT_EQ(j.at("d_N").get<int>(), 5);
  EXPECT_EQ(j.at("null_dimension").get<int>(), 2);
  const ResidualFilter back = nlohmann::json::parse(j.dump()).get<ResidualFilter>();
  EXPECT_EQ(filter_digest(back), filter_digest(f));
  const SystemMatrices base = build_system_matrices(ChannelParams::reference());
  const Signal y = Simulate(faulted_dynamics(base, FaultSpec::default_for(FaultVariant::EC)), m.x_a_hat);
  EXPECT_EQ(compute_residual(back, y).samples, compute_residual(f, y).samples);

  nlohmann::json broken = j;
  broken["B_d"] = nlohmann::json::array({nlohmann::json::array({1.0})});
  EXPECT_THROW(broken.get<ResidualFilter>(), ValidationError);
}

GTEST_TEST(FilterConfig, JsonRoundTripAndValidation) {
  FilterConfig c;
  c.order = 6;
  c.oscillations = 5.0;
  c.convention = FrequencyConvention::Literal;
  c.statistic = DetectionStatistic::PeakAbs;
  const nlohmann::json j = c;
  const FilterConfig back = j.get<FilterConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_THROW((nlohmann::json{{"mu", 0.0}}.get<FilterConfig>()), ValidationError);
  EXPECT_THROW((nlohmann::json{{"frequency_convention", "radians"}}.get<FilterConfig>()), ValidationError);
  EXPECT_THROW((nlohmann::json{{"order", 2}}.get<FilterConfig>()), ValidationError);
}

GTEST_TEST(SynthesizeFilter, HigherOrderStillAnnihilates) {
  FilterConfig cfg;
  cfg.order = 6;
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m, cfg);
  EXPECT_EQ(f.polys.alpha.degree(), 5);
  EXPECT_EQ(f.realization.dimension(), 5);
  const Signal y = Simulate(m.A, m.x_a_hat);
  EXPECT_LE(compute_residual(f, y).peak(), 1e-6 * y.peak());
}

}  // namespace
}  // namespace inkwell
