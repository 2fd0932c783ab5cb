#include "inkwell/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "inkwell/linalg.hpp"
#include "inkwell/nelder_mead.hpp"

namespace inkwell {

Eigen::Matrix4d ChannelCoefficients::state_matrix() const {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  A(0, 2) = 1.0;
  A(1, 3) = 1.0;
  A(2, 0) = A(2, 1) = -restrictor_coupling;
  A(2, 2) = -restrictor_damping;
  A(3, 0) = A(3, 1) = -nozzle_coupling;
  A(3, 3) = -nozzle_damping;
  return A;
}

ChannelCoefficients ChannelCoefficients::from_state_matrix(const Eigen::Matrix4d& A) {
  return {-A(2, 0), -A(2, 2), -A(3, 0), -A(3, 3)};
}

ChannelCoefficients ChannelCoefficients::reference() { return {4.33e11, 1.59e5, 6.17e11, 1.75e5}; }

Signal IdentifiedModel::predicted() const {
  return simulate_autonomous(A, C, x_a_hat, grid.t_a, grid.dt, grid.n);
}

void IdentifiedModel::validate() const {
  if (!A.allFinite() || !C.allFinite() || !x_a_hat.allFinite()) {
    throw ValidationError("identified model has non-finite entries");
  }
  if (!has_channel_structure(A, C)) {
    throw ValidationError("identified model does not have the channel structure");
  }
  grid.validate();
}

IdentifiedModel IdentifiedModel::reference(const SampleGrid& grid) {
  IdentifiedModel m;
  m.A = ChannelCoefficients::reference().state_matrix();
  m.x_a_hat = reference_acquisition_state();
  m.grid = grid;
  return m;
}

namespace {

std::vector<double> row_vector(const Eigen::MatrixXd& m, Eigen::Index r) {
  std::vector<double> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
  return out;
}

std::string loss_name(FitLoss l) { return l == FitLoss::L1 ? "l1" : "squared"; }

FitLoss parse_loss(const std::string& s) {
  if (s == "l1") return FitLoss::L1;
  if (s == "squared") return FitLoss::Squared;
  throw ValidationError("unknown fit loss '" + s + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const IdentifiedModel& m) {
  const ChannelCoefficients k = m.coefficients();
  nlohmann::json A = nlohmann::json::array();
  for (Eigen::Index r = 0; r < 4; ++r) A.push_back(row_vector(m.A, r));
  j = nlohmann::json{{"A", A},
                     {"C", row_vector(m.C, 0)},
                     {"x_a_hat", std::vector<double>(m.x_a_hat.data(), m.x_a_hat.data() + 4)},
                     {"coefficients",
                      {{"a31", -k.restrictor_coupling},
                       {"a33", -k.restrictor_damping},
                       {"a41", -k.nozzle_coupling},
                       {"a44", -k.nozzle_damping}}},
                     {"fit_residual", m.fit_residual},
                     {"loss", loss_name(m.loss)},
                     {"grid", m.grid}};
}

void from_json(const nlohmann::json& j, IdentifiedModel& m) {
  const auto A = j.at("A").get<std::vector<std::vector<double>>>();
  const auto C = j.at("C").get<std::vector<double>>();
  const auto x = j.at("x_a_hat").get<std::vector<double>>();
  if (A.size() != 4 || C.size() != 4 || x.size() != 4) {
    throw ValidationError("model JSON needs a 4x4 A, 4-entry C and x_a_hat");
  }
  for (int r = 0; r < 4; ++r) {
    if (A[static_cast<std::size_t>(r)].size() != 4) throw ValidationError("model A must be 4x4");
    for (int c = 0; c < 4; ++c) m.A(r, c) = A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    m.C(r) = C[static_cast<std::size_t>(r)];
    m.x_a_hat(r) = x[static_cast<std::size_t>(r)];
  }
  m.fit_residual = j.value("fit_residual", 0.0);
  m.loss = parse_loss(j.value("loss", std::string("l1")));
  m.grid = j.at("grid").get<SampleGrid>();
  m.validate();
}

void to_json(nlohmann::json& j, const SysIdConfig& c) {
  j = nlohmann::json{{"loss", loss_name(c.loss)},
                     {"grid_points", c.grid_points},
                     {"coupling_range", {c.coupling_min, c.coupling_max}},
                     {"damping_range", {c.damping_min, c.damping_max}},
                     {"refine_starts", c.refine_starts},
                     {"max_evaluations", c.max_evaluations},
                     {"x_tolerance", c.x_tolerance},
                     {"f_tolerance", c.f_tolerance},
                     {"max_signals", c.max_signals}};
}

void from_json(const nlohmann::json& j, SysIdConfig& c) {
  c = SysIdConfig{};
  c.loss = parse_loss(j.value("loss", loss_name(c.loss)));
  c.grid_points = j.value("grid_points", c.grid_points);
  if (j.contains("coupling_range")) {
    const auto r = j.at("coupling_range").get<std::vector<double>>();
    if (r.size() != 2) throw ValidationError("coupling_range needs two entries");
    c.coupling_min = r[0];
    c.coupling_max = r[1];
  }
  if (j.contains("damping_range")) {
    const auto r = j.at("damping_range").get<std::vector<double>>();
    if (r.size() != 2) throw ValidationError("damping_range needs two entries");
    c.damping_min = r[0];
    c.damping_max = r[1];
  }
  c.refine_starts = j.value("refine_starts", c.refine_starts);
  c.max_evaluations = j.value("max_evaluations", c.max_evaluations);
  c.x_tolerance = j.value("x_tolerance", c.x_tolerance);
  c.f_tolerance = j.value("f_tolerance", c.f_tolerance);
  c.max_signals = j.value("max_signals", c.max_signals);
  if (c.grid_points < 1 || c.refine_starts < 1 || c.max_evaluations < 1) {
    throw ValidationError("sysid grid_points, refine_starts and max_evaluations must be >= 1");
  }
  if (!(c.coupling_min > 0 && c.coupling_max >= c.coupling_min && c.damping_min > 0 &&
        c.damping_max >= c.damping_min)) {
    throw ValidationError("sysid coefficient ranges must be positive and ordered");
  }
}

double fit_objective(const IdentifiedModel& candidate, std::span<const Signal> signals,
                     FitLoss loss) {
  if (signals.empty()) return 0.0;
  const Signal& first = signals.front();
  const Signal model = simulate_autonomous(candidate.A, candidate.C, candidate.x_a_hat, first.t_a,
                                           first.dt, static_cast<int>(first.size()));
  double total = 0.0;
  for (const Signal& s : signals) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double e = s.samples[k] - model.samples[k];
      total += loss == FitLoss::L1 ? std::abs(e) : e * e;
    }
  }
  return total * first.dt;
}

namespace {

// Acquisition states reachable through the output: V_r + V_n enters only as
// a sum, so x = (s/2, s/2, v_r, v_n).
Eigen::Vector4d state_from_weights(const Eigen::Vector3d& w) {
  return {0.5 * w(0), 0.5 * w(0), w(1), w(2)};
}

// Columns: output responses to (1/2, 1/2, 0, 0), e_3 and e_4.
Eigen::MatrixXd basis_responses(const Eigen::Matrix4d& A, double dt, Eigen::Index n) {
  const Eigen::Vector4d d = balancing_scales(A);
  const Eigen::Matrix4d phi = expm(d.cwiseInverse().asDiagonal() * A * d.asDiagonal() * dt);
  const Eigen::RowVector4d c = Eigen::RowVector4d(0, 0, 1, 1) * d.asDiagonal();
  Eigen::Matrix<double, 4, 3> z;
  z.col(0) = Eigen::Vector4d(0.5, 0.5, 0, 0);
  z.col(1) = Eigen::Vector4d::UnitZ();
  z.col(2) = Eigen::Vector4d::UnitW();
  z = d.cwiseInverse().asDiagonal() * z;
  Eigen::MatrixXd out(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.row(k) = c * z;
    z = phi * z;
  }
  return out;
}

ChannelCoefficients coefficients_from_log(const Eigen::VectorXd& theta) {
  return {std::exp(theta(0)), std::exp(theta(1)), std::exp(theta(2)), std::exp(theta(3))};
}

struct ProjectedFit {
  double value;
  Eigen::Vector3d weights;
};

ProjectedFit projected_fit(const Eigen::VectorXd& theta, const Eigen::VectorXd& mean, double dt) {
  if (!theta.allFinite() || theta.cwiseAbs().maxCoeff() > 80.0) {
    return {std::numeric_limits<double>::infinity(), Eigen::Vector3d::Zero()};
  }
  const Eigen::MatrixXd B = basis_responses(coefficients_from_log(theta).state_matrix(), dt,
                                            mean.size());
  if (!B.allFinite()) return {std::numeric_limits<double>::infinity(), Eigen::Vector3d::Zero()};
  const Eigen::Vector3d w = B.colPivHouseholderQr().solve(mean);
  return {(mean - B * w).squaredNorm(), w};
}

}  // namespace

IdentifiedModel identify(std::span<const Signal> all_signals, const SysIdConfig& cfg) {
  if (all_signals.empty()) throw ValidationError("identify needs at least one signal");
  for (const Signal& s : all_signals) {
    s.validate();
    if (!s.same_grid(all_signals.front())) {
      throw ValidationError("identify needs signals on a shared grid");
    }
    if (s.size() < 2) throw ValidationError("identify needs signals with at least 2 samples");
  }
  const std::size_t used = cfg.max_signals == 0 ? all_signals.size()
                                                : std::min(cfg.max_signals, all_signals.size());
  const std::span<const Signal> signals = all_signals.first(used);
  const Signal& first = signals.front();
  const double dt = first.dt;
  const auto n = static_cast<Eigen::Index>(first.size());

  IdentifiedModel model;
  model.loss = cfg.loss;
  model.grid = {first.t_a, dt, static_cast<int>(n)};

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  for (const Signal& s : signals) mean += Eigen::Map<const Eigen::VectorXd>(s.samples.data(), n);
  mean /= static_cast<double>(signals.size());

  const std::array<double, 4> lo{std::log(cfg.coupling_min), std::log(cfg.damping_min),
                                 std::log(cfg.coupling_min), std::log(cfg.damping_min)};
  const std::array<double, 4> hi{std::log(cfg.coupling_max), std::log(cfg.damping_max),
                                 std::log(cfg.coupling_max), std::log(cfg.damping_max)};

  bool all_zero = true;
  for (const Signal& s : signals) {
    for (double v : s.samples) all_zero = all_zero && v == 0.0;
  }
  if (all_zero) {
    Eigen::VectorXd centre(4);
    for (int i = 0; i < 4; ++i) centre(i) = 0.5 * (lo[static_cast<std::size_t>(i)] + hi[static_cast<std::size_t>(i)]);
    model.A = coefficients_from_log(centre).state_matrix();
    model.x_a_hat.setZero();
    model.fit_residual = 0.0;
    return model;
  }

  // Stage 1: squared error with the acquisition state projected out. For the
  // squared loss the fit to the mean signal has the same minimizer as the
  // fit to all signals.
  struct Start {
    double value;
    Eigen::VectorXd theta;
  };
  std::vector<Start> starts;
  const int g = cfg.grid_points;
  auto grid_value = [&](int axis, int i) {
    const auto a = static_cast<std::size_t>(axis);
    return g == 1 ? 0.5 * (lo[a] + hi[a]) : lo[a] + (hi[a] - lo[a]) * i / (g - 1);
  };
  for (int i0 = 0; i0 < g; ++i0)
    for (int i1 = 0; i1 < g; ++i1)
      for (int i2 = 0; i2 < g; ++i2)
        for (int i3 = 0; i3 < g; ++i3) {
          Eigen::VectorXd theta(4);
          theta << grid_value(0, i0), grid_value(1, i1), grid_value(2, i2), grid_value(3, i3);
          starts.push_back({projected_fit(theta, mean, dt).value, theta});
        }
  std::stable_sort(starts.begin(), starts.end(),
                   [](const Start& a, const Start& b) { return a.value < b.value; });

  NelderMeadOptions ls_opts;
  ls_opts.max_evaluations = cfg.max_evaluations;
  ls_opts.x_tolerance = cfg.x_tolerance;
  ls_opts.f_tolerance = cfg.f_tolerance;
  ls_opts.initial_step = Eigen::VectorXd::Constant(4, 0.25);
  auto projected = [&](const Eigen::VectorXd& theta) { return projected_fit(theta, mean, dt).value; };

  NelderMeadResult best;
  best.value = std::numeric_limits<double>::infinity();
  const int refine = std::min<int>(cfg.refine_starts, static_cast<int>(starts.size()));
  for (int i = 0; i < refine; ++i) {
    NelderMeadResult r = nelder_mead(projected, starts[static_cast<std::size_t>(i)].theta, ls_opts);
    // Restart from the optimum with a fresh simplex to escape premature collapse.
    r = nelder_mead(projected, r.x, ls_opts);
    if (r.value < best.value) best = r;
  }
  Eigen::Vector3d weights = projected_fit(best.x, mean, dt).weights;

  auto assemble = [&](const Eigen::VectorXd& p) {
    IdentifiedModel m = model;
    m.A = coefficients_from_log(p.head(4)).state_matrix();
    m.x_a_hat = state_from_weights(p.tail(3));
    return m;
  };

  Eigen::VectorXd params(7);
  params << best.x, weights;
  bool converged = best.converged;

  if (cfg.loss == FitLoss::L1) {
    // Stage 2: the absolute-error objective over all seven parameters.
    auto l1 = [&](const Eigen::VectorXd& p) {
      if (!p.allFinite() || p.head(4).cwiseAbs().maxCoeff() > 80.0) {
        return std::numeric_limits<double>::infinity();
      }
      try {
        return fit_objective(assemble(p), signals, FitLoss::L1);
      } catch (const SimulationError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    NelderMeadOptions opts = ls_opts;
    const double wscale = std::max(weights.cwiseAbs().maxCoeff(), 1e-300);
    opts.initial_step.resize(7);
    opts.initial_step.head(4).setConstant(0.01);
    for (int i = 0; i < 3; ++i) opts.initial_step(4 + i) = 0.02 * std::abs(weights(i)) + 1e-3 * wscale;
    NelderMeadResult r = nelder_mead(l1, params, opts);
    opts.initial_step *= 0.1;
    r = nelder_mead(l1, r.x, opts);
    params = r.x;
    converged = r.converged;
  }

  model = assemble(params);
  model.fit_residual = fit_objective(model, signals, cfg.loss);
  if (!converged) {
    throw IdentificationError("parameter search did not converge within " +
                                  std::to_string(cfg.max_evaluations) + " evaluations",
                              model);
  }
  return model;
}

}  // namespace inkwell
