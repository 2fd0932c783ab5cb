#include "inkwell/fd_filter.hpp"

#include <cmath>
#include <numbers>

#include "inkwell/digest.hpp"
#include "inkwell/json_eigen.hpp"
#include "inkwell/kernels.hpp"
#include "inkwell/linalg.hpp"

namespace inkwell {

DaeMatrices assemble_dae(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C,
                         std::span<const FaultSpec> faults) {
  DaeMatrices dae;
  dae.H0.topRows<4>() = A;
  dae.H0.row(4) = C;
  dae.H1.topRows<4>() = -Eigen::Matrix4d::Identity();
  dae.L(4) = -1.0;
  for (const FaultSpec& f : faults) {
    Matrix54d F = Matrix54d::Zero();
    F.topRows<4>() = fault_pattern(f.variant);
    dae.F.push_back(F);
    dae.fault_order.push_back(f.variant);
  }
  return dae;
}

DaeMatrices assemble_dae(const IdentifiedModel& model, std::span<const FaultSpec> faults) {
  model.validate();
  return assemble_dae(model.A, model.C, faults);
}

Eigen::MatrixXd stack_hbar(const DaeMatrices& dae, int order) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(5 * order, 4 * (order + 1));
  for (int k = 0; k < order; ++k) {
    H.block<5, 4>(5 * k, 4 * k) = dae.H0;
    H.block<5, 4>(5 * k, 4 * (k + 1)) = dae.H1;
  }
  return H;
}

Eigen::MatrixXd stack_fbar(const Matrix54d& F, int order) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(5 * order, 4 * order);
  for (int k = 0; k < order; ++k) out.block<5, 4>(5 * k, 4 * k) = F;
  return out;
}

namespace {

void normalize_sign(Eigen::RowVectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

NullSpaceResult left_null_space(const Eigen::MatrixXd& M, double rel_tol) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? rel_tol * sv(0) : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff) ++rank;
  }
  NullSpaceResult res;
  res.singular_values = sv;
  res.dimension = static_cast<int>(M.rows() - rank);
  if (res.dimension == 0) {
    throw SynthesisError("left null space is empty; increase the filter order d_N");
  }
  const Eigen::MatrixXd& U = svd.matrixU();
  res.basis = U.rightCols(res.dimension).transpose();
  res.vector = U.col(M.rows() - 1).transpose();
  normalize_sign(res.vector);
  return res;
}

Eigen::RowVectorXd minimal_degree_null_vector(const NullSpaceResult& ns, int block_size) {
  Eigen::MatrixXd basis = ns.basis;
  const Eigen::Index width = basis.cols();
  Eigen::Index live = width;
  // Combine basis rows to cancel the highest block while more than one row
  // remains.
  while (basis.rows() > 1 && live > block_size) {
    const Eigen::MatrixXd top = basis.middleCols(live - block_size, block_size);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(top.transpose(), Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double scale = basis.cwiseAbs().maxCoeff();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 1e-10 * scale) ++rank;
    }
    const Eigen::Index keep = basis.rows() - rank;
    if (keep == 0) break;
    const Eigen::MatrixXd combos = svd.matrixV().rightCols(keep).transpose();
    Eigen::MatrixXd reduced = combos * basis;
    reduced.middleCols(live - block_size, width - live + block_size).setZero();
    // Re-orthonormalize the surviving rows.
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(reduced.transpose());
    basis = qr.householderQ() * Eigen::MatrixXd::Identity(width, keep);
    basis.transposeInPlace();
    basis.rightCols(width - live + block_size).setZero();
    live -= block_size;
  }
  Eigen::RowVectorXd v = basis.row(0);
  v /= v.norm();
  normalize_sign(v);
  return v;
}

std::vector<bool> check_sensitivity(const Eigen::RowVectorXd& N_bar, const DaeMatrices& dae,
                                    int order) {
  const double scale = inf_norm(N_bar);
  std::vector<bool> out;
  for (const Matrix54d& F : dae.F) {
    out.push_back(inf_norm(N_bar * stack_fbar(F, order)) > 1e-6 * scale);
  }
  return out;
}

double residual_frequency(double oscillations, double window, FrequencyConvention c) {
  return (c == FrequencyConvention::Angular ? 2.0 * std::numbers::pi : 1.0) * oscillations /
         window;
}

Polynomial design_denominator(int order, double oscillations, double window,
                              FrequencyConvention convention) {
  if (order < 3) {
    throw SynthesisError("filter order d_N must be >= 3 to hold the marginal pole pair");
  }
  if (!(oscillations >= 1.0) || !(window > 0.0)) {
    throw ValidationError("need n_o >= 1 and T > 0");
  }
  const double w = residual_frequency(oscillations, window, convention);
  Polynomial alpha({w * w, 0.0, 1.0});
  for (int i = 0; i < order - 3; ++i) alpha = alpha * Polynomial({w, 1.0});
  return alpha;
}

Eigen::RowVectorXd FilterPolynomials::stacked() const {
  Eigen::RowVectorXd out(5 * static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t k = 0; k < blocks.size(); ++k) out.segment<5>(5 * static_cast<Eigen::Index>(k)) = blocks[k];
  return out;
}

Polynomial FilterPolynomials::output_numerator() const {
  std::vector<double> c;
  for (const auto& b : blocks) c.push_back(b(4));
  return Polynomial(std::move(c));
}

Eigen::RowVectorXd FilterPolynomials::physical_stacked() const {
  Eigen::RowVectorXd out = stacked();
  double power = 1.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto blk = out.segment<5>(5 * static_cast<Eigen::Index>(k));
    blk *= power;
    blk(2) /= time_scale;
    blk(3) /= time_scale;
    power /= time_scale;
  }
  return out;
}

namespace {

// Controllable canonical form of a strictly proper num/den, den monic.
struct ContinuousSiso {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
};

ContinuousSiso canonical_form(const Polynomial& num, const Polynomial& den) {
  const int n = den.degree();
  const double lead = den.leading();
  ContinuousSiso s{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, 1),
                   Eigen::MatrixXd::Zero(1, n)};
  for (int i = 0; i + 1 < n; ++i) s.A(i, i + 1) = 1.0;
  for (int i = 0; i < n; ++i) {
    s.A(n - 1, i) = -den.coefficients()[static_cast<std::size_t>(i)] / lead;
    if (static_cast<std::size_t>(i) < num.coefficients().size()) {
      s.C(0, i) = num.coefficients()[static_cast<std::size_t>(i)] / lead;
    }
  }
  s.B(n - 1, 0) = 1.0;
  return s;
}

Polynomial trimmed(const Polynomial& p) {
  std::vector<double> c = p.coefficients();
  c.resize(static_cast<std::size_t>(std::max(p.degree(), 0) + 1), 0.0);
  return Polynomial(std::move(c));
}

bool has_marginal_pair(const Polynomial& den, double w) {
  if (!(w > 0.0)) return false;
  double scale = 0.0;
  double p = 1.0;
  for (double c : den.coefficients()) {
    scale += std::abs(c) * p;
    p *= w;
  }
  return std::abs(den(std::complex<double>(0.0, w))) <= 1e-9 * scale;
}

}  // namespace

DiscreteRealization realize_filter(const FilterPolynomials& polys, double dt) {
  if (!(dt > 0.0)) throw ValidationError("realize_filter needs dt > 0");
  const Polynomial num = trimmed(polys.y_numerator());
  const Polynomial den = trimmed(polys.alpha);
  if (den.degree() < 1) throw SynthesisError("filter denominator must have degree >= 1");
  if (num.degree() >= den.degree()) {
    throw SynthesisError("filter is not strictly proper: deg N(s)L >= deg alpha");
  }
  const double h = dt * polys.time_scale;
  const double w = polys.omega_r / polys.time_scale;
  const int n = den.degree();

  DiscreteRealization d;
  d.A = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, 1);
  d.C = Eigen::MatrixXd::Zero(1, n);
  d.D = Eigen::MatrixXd::Zero(1, 2);

  if (has_marginal_pair(den, w)) {
    const Polynomial osc({w * w, 0.0, 1.0});
    const Polynomial beta = trimmed(den.divide(osc).first);
    // num/den = (c1 s + c0)/(s^2 + w^2) + q/beta.
    const std::complex<double> v = num(std::complex<double>(0.0, w)) /
                                   beta(std::complex<double>(0.0, w));
    const double c0 = v.real();
    const double c1 = v.imag() / w;
    const Polynomial q = (num - Polynomial({c0, c1}) * beta).divide(osc).first;

    const double theta = w * h;
    const double sn = std::sin(theta);
    const double cs = std::cos(theta);
    const double half = std::sin(0.5 * theta);
    d.A.topLeftCorner(2, 2) << cs, sn, -sn, cs;
    b(0, 0) = 2.0 * half * half / w;
    b(1, 0) = sn / w;
    d.C(0, 0) = c0 / w;
    d.C(0, 1) = c1;

    if (beta.degree() >= 1) {
      const ContinuousSiso rest = canonical_form(q, beta);
      const ZohPair z = zoh_discretize(rest.A, rest.B, h);
      const int m = beta.degree();
      d.A.bottomRightCorner(m, m) = z.Ad;
      b.bottomRows(m) = z.Bd;
      d.C.rightCols(m) = rest.C;
    }
  } else {
    const ContinuousSiso s = canonical_form(num, den);
    const ZohPair z = zoh_discretize(s.A, s.B, h);
    d.A = z.Ad;
    b = z.Bd;
    d.C = s.C;
  }
  d.B.resize(n, 2);
  d.B.col(0) = b;
  d.B.col(1) = -b;
  return d;
}

std::complex<double> DiscreteRealization::y_response(double omega, double dt) const {
  const std::complex<double> z = std::exp(std::complex<double>(0.0, omega * dt));
  const Eigen::MatrixXcd M = z * Eigen::MatrixXcd::Identity(A.rows(), A.cols()) - A.cast<std::complex<double>>();
  const Eigen::VectorXcd x = M.partialPivLu().solve(B.col(0).cast<std::complex<double>>());
  return (C.cast<std::complex<double>>() * x)(0, 0) + D(0, 0);
}

std::complex<double> continuous_y_response(const FilterPolynomials& polys, double omega) {
  const std::complex<double> s(0.0, omega / polys.time_scale);
  return polys.y_numerator()(s) / polys.alpha(s);
}

NormalizedModel normalize_model(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C) {
  double ws = std::sqrt(std::abs(A(2, 0)) + std::abs(A(3, 0)));
  if (!(ws > 0.0) || !std::isfinite(ws)) ws = 1.0;
  const Eigen::Vector4d t(1.0, 1.0, ws, ws);
  NormalizedModel nm;
  nm.A = t.cwiseInverse().asDiagonal() * A * t.asDiagonal() / ws;
  nm.C = C * t.asDiagonal() / ws;
  nm.time_scale = ws;
  return nm;
}

Signal ResidualFilter::model_signal(double t_a, std::size_t n) const {
  Signal s;
  s.t_a = t_a;
  s.dt = dt;
  s.samples.resize(n);
  Eigen::Vector4d x = model_state;
  for (auto& v : s.samples) {
    v = model_output.dot(x);
    x = model_transition * x;
  }
  return s;
}

void FilterConfig::validate() const {
  if (order < 3) throw ValidationError("filter order must be >= 3");
  if (!(oscillations >= 1.0)) throw ValidationError("oscillations must be >= 1");
  if (!(window >= 0.0)) throw ValidationError("window must be >= 0");
  if (!(mu > 0.0)) throw ValidationError("mu must be > 0");
}

namespace {

std::string convention_name(FrequencyConvention c) {
  return c == FrequencyConvention::Angular ? "angular" : "literal";
}
std::string statistic_name(DetectionStatistic s) {
  return s == DetectionStatistic::Energy ? "energy" : "peak";
}

}  // namespace

void to_json(nlohmann::json& j, const FilterConfig& c) {
  j = nlohmann::json{{"order", c.order},
                     {"oscillations", c.oscillations},
                     {"window", c.window},
                     {"mu", c.mu},
                     {"frequency_convention", convention_name(c.convention)},
                     {"statistic", statistic_name(c.statistic)}};
}

void from_json(const nlohmann::json& j, FilterConfig& c) {
  c = FilterConfig{};
  c.order = j.value("order", c.order);
  c.oscillations = j.value("oscillations", c.oscillations);
  c.window = j.value("window", c.window);
  c.mu = j.value("mu", c.mu);
  const std::string conv = j.value("frequency_convention", convention_name(c.convention));
  if (conv == "angular") {
    c.convention = FrequencyConvention::Angular;
  } else if (conv == "literal") {
    c.convention = FrequencyConvention::Literal;
  } else {
    throw ValidationError("frequency_convention must be angular or literal");
  }
  const std::string stat = j.value("statistic", statistic_name(c.statistic));
  if (stat == "energy") {
    c.statistic = DetectionStatistic::Energy;
  } else if (stat == "peak") {
    c.statistic = DetectionStatistic::PeakAbs;
  } else {
    throw ValidationError("statistic must be energy or peak");
  }
  c.validate();
}

ResidualFilter synthesize_filter(const IdentifiedModel& model, const FilterConfig& cfg) {
  model.validate();
  cfg.validate();
  const double window = cfg.window > 0.0 ? cfg.window : model.grid.n * model.grid.dt;
  const NormalizedModel nm = normalize_model(model.A, model.C);

  std::vector<FaultSpec> faults;
  for (FaultVariant v : kFaultVariants) faults.push_back(FaultSpec::default_for(v));
  const DaeMatrices dae = assemble_dae(nm.A, nm.C, faults);
  const NullSpaceResult ns = left_null_space(stack_hbar(dae, cfg.order));
  const Eigen::RowVectorXd n_bar = minimal_degree_null_vector(ns);

  ResidualFilter f;
  f.polys.order = cfg.order;
  f.polys.null_dimension = ns.dimension;
  f.polys.time_scale = nm.time_scale;
  f.polys.omega_r = residual_frequency(cfg.oscillations, window, cfg.convention);
  for (int k = 0; k < cfg.order; ++k) f.polys.blocks.push_back(n_bar.segment<5>(5 * k));
  const Polynomial alpha = design_denominator(cfg.order, cfg.oscillations, window, cfg.convention)
                               .with_scaled_variable(nm.time_scale);
  f.polys.alpha = alpha.scaled(1.0 / alpha.leading());

  f.dt = model.grid.dt;
  f.realization = realize_filter(f.polys, f.dt);
  f.x_a_hat = model.x_a_hat;
  const Eigen::Vector4d t(1.0, 1.0, nm.time_scale, nm.time_scale);
  f.model_transition = expm(nm.A * (f.dt * nm.time_scale));
  f.model_output = model.C * t.asDiagonal();
  f.model_state = t.cwiseInverse().asDiagonal() * model.x_a_hat;
  f.fault_order = dae.fault_order;
  f.sensitive = check_sensitivity(n_bar, dae, cfg.order);
  return f;
}

Signal compute_residual(const ResidualFilter& f, const Signal& s) {
  if (std::abs(s.dt - f.dt) > 1e-12 * f.dt) {
    throw ValidationError("signal sample period does not match the filter");
  }
  const DiscreteRealization& d = f.realization;
  const Eigen::Index n = d.A.rows();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd next(n);
  Eigen::Vector4d x = f.model_state;
  Signal r;
  r.t_a = s.t_a;
  r.dt = s.dt;
  r.samples.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double y = s.samples[k];
    const double y_model = f.model_output.dot(x);
    r.samples[k] = d.C.row(0).dot(z) + d.D(0, 0) * y + d.D(0, 1) * y_model;
    next.noalias() = d.A * z;
    next += d.B.col(0) * y + d.B.col(1) * y_model;
    z.swap(next);
    x = f.model_transition * x;
  }
  return r;
}

double residual_energy(const Signal& r) { return kernels::sum_squares(r.samples) * r.dt; }

double residual_statistic(const Signal& r, DetectionStatistic statistic) {
  return statistic == DetectionStatistic::Energy ? residual_energy(r) : r.peak();
}

double calibrate_threshold(std::span<const Signal> healthy_residuals, double mu,
                           DetectionStatistic statistic) {
  if (healthy_residuals.empty()) {
    throw ValidationError("threshold calibration needs at least one healthy residual");
  }
  if (!(mu > 0.0)) throw ValidationError("mu must be > 0");
  double m = 0.0;
  for (const Signal& r : healthy_residuals) m = std::max(m, residual_statistic(r, statistic));
  return mu * m;
}

DetectionResult detect(double energy, double threshold) {
  if (!(energy >= 0.0) || !(threshold >= 0.0)) {
    throw ValidationError("energy and threshold must be >= 0");
  }
  return {energy, threshold, energy > threshold};
}

// JSON ----------------------------------------------------------------------

void to_json(nlohmann::json& j, const ResidualFilter& f) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : f.polys.blocks) blocks.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  std::vector<std::string> faults;
  for (FaultVariant v : f.fault_order) faults.emplace_back(to_string(v));
  j = nlohmann::json{
      {"d_N", f.polys.order},
      {"null_dimension", f.polys.null_dimension},
      {"N_blocks", blocks},
      {"alpha", f.polys.alpha.coefficients()},
      {"omega_r", f.polys.omega_r},
      {"time_scale", f.polys.time_scale},
      {"x_a_hat", vector_to_std(f.x_a_hat)},
      {"dt", f.dt},
      {"A_d", matrix_to_json(f.realization.A)},
      {"B_d", matrix_to_json(f.realization.B)},
      {"C_d", matrix_to_json(f.realization.C)},
      {"D_d", matrix_to_json(f.realization.D)},
      {"model_transition", matrix_to_json(f.model_transition)},
      {"model_output", vector_to_std(f.model_output)},
      {"model_state", vector_to_std(f.model_state)},
      {"faults", faults},
      {"sensitive", f.sensitive}};
}

void from_json(const nlohmann::json& j, ResidualFilter& f) {
  f = ResidualFilter{};
  f.polys.order = j.at("d_N").get<int>();
  f.polys.null_dimension = j.value("null_dimension", 0);
  for (const auto& b : j.at("N_blocks")) {
    const auto v = b.get<std::vector<double>>();
    if (v.size() != 5) throw ValidationError("filter N blocks must have 5 entries");
    f.polys.blocks.emplace_back(Eigen::Map<const Eigen::RowVectorXd>(v.data(), 5));
  }
  f.polys.alpha = Polynomial(j.at("alpha").get<std::vector<double>>());
  f.polys.omega_r = j.at("omega_r").get<double>();
  f.polys.time_scale = j.at("time_scale").get<double>();
  auto vec4 = [&](const char* key) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 4) throw ValidationError(std::string("filter ") + key + " needs 4 entries");
    return Eigen::Vector4d(v[0], v[1], v[2], v[3]);
  };
  f.x_a_hat = vec4("x_a_hat");
  f.dt = j.at("dt").get<double>();
  f.realization.A = matrix_from_json(j.at("A_d"));
  f.realization.B = matrix_from_json(j.at("B_d"));
  f.realization.C = matrix_from_json(j.at("C_d"));
  f.realization.D = matrix_from_json(j.at("D_d"));
  const Eigen::MatrixXd T = matrix_from_json(j.at("model_transition"));
  if (T.rows() != 4 || T.cols() != 4) throw ValidationError("model_transition must be 4x4");
  f.model_transition = T;
  f.model_output = vec4("model_output").transpose();
  f.model_state = vec4("model_state");
  for (const auto& name : j.value("faults", std::vector<std::string>{})) {
    f.fault_order.push_back(parse_fault_variant(name));
  }
  for (bool b : j.value("sensitive", std::vector<bool>{})) f.sensitive.push_back(b);

  const Eigen::Index n = f.realization.A.rows();
  if (f.realization.A.cols() != n || f.realization.B.rows() != n || f.realization.B.cols() != 2 ||
      f.realization.C.rows() != 1 || f.realization.C.cols() != n ||
      f.realization.D.rows() != 1 || f.realization.D.cols() != 2) {
    throw ValidationError("filter realization has inconsistent dimensions");
  }
  if (!(f.dt > 0.0)) throw ValidationError("filter dt must be > 0");
}

std::string filter_digest(const ResidualFilter& f) {
  const nlohmann::json j = f;
  return sha256_hex(j.dump());
}

}  // namespace inkwell
