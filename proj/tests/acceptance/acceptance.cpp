// Acceptance checks, one PASS/FAIL line each. Exit status is nonzero when any
// check fails. argv[1] is the path of the inkwell executable.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "inkwell/dataset_io.hpp"
#include "inkwell/experiment.hpp"
#include "inkwell/fd_filter.hpp"
#include "inkwell/fi_classifier.hpp"
#include "inkwell/metrics.hpp"
#include "inkwell/simulator.hpp"
#include "inkwell/sysid.hpp"

namespace inkwell {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const SampleGrid kGrid{0.0, 1e-7, 500};

std::vector<FaultSpec> AllFaults() {
  std::vector<FaultSpec> out;
  for (FaultVariant v : kFaultVariants) out.push_back(FaultSpec::default_for(v));
  return out;
}

Verdict NullSpaceAndSensitivity() {
  const auto t0 = Clock::now();
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const NormalizedModel nm = normalize_model(m.A, m.C);
  const std::vector<FaultSpec> faults = AllFaults();
  const DaeMatrices dae = assemble_dae(nm.A, nm.C, faults);
  const int order = f.polys.order;
  const Eigen::RowVectorXd N = f.polys.stacked();
  const Eigen::MatrixXd H = stack_hbar(dae, order);
  const double n_norm = N.cwiseAbs().maxCoeff();
  const double h_norm = H.cwiseAbs().rowwise().sum().maxCoeff();
  const double nh = (N * H).cwiseAbs().maxCoeff();
  bool pass = nh <= 1e-9 * n_norm * h_norm;
  double weakest = std::numeric_limits<double>::infinity();
  for (const Matrix54d& F : dae.F) {
    const double s = (N * stack_fbar(F, order)).cwiseAbs().maxCoeff() / n_norm;
    weakest = std::min(weakest, s);
    pass = pass && s > 1e-6;
  }
  const double secs = Seconds(t0);
  pass = pass && secs < 1.0;
  return {pass, Fmt("||N H||/(||N|| ||H||) = %.2e, min ||N F_i||/||N|| = %.2e, %.3f s",
                    nh / (n_norm * h_norm), weakest, secs)};
}

Verdict HealthyResidualVanishes() {
  const IdentifiedModel m = IdentifiedModel::reference(kGrid);
  const ResidualFilter f = synthesize_filter(m);
  const Signal y = simulate_autonomous(m.A, m.C, m.x_a_hat, kGrid.t_a, kGrid.dt, kGrid.n);
  const Signal r = compute_residual(f, y);
  const double ratio = r.peak() / y.peak();
  return {ratio <= 1e-6, Fmt("max|r| / max|y| = %.2e", ratio)};
}

std::vector<double> Rk4(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C, Eigen::Vector4d x,
                        double dt, int n, int substeps) {
  const double h = dt / substeps;
  std::vector<double> y;
  for (int k = 0; k < n; ++k) {
    y.push_back(C.dot(x));
    for (int s = 0; s < substeps; ++s) {
      const Eigen::Vector4d k1 = A * x;
      const Eigen::Vector4d k2 = A * (x + 0.5 * h * k1);
      const Eigen::Vector4d k3 = A * (x + 0.5 * h * k2);
      const Eigen::Vector4d k4 = A * (x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return y;
}

Verdict SimulatorMatchesIntegrator() {
  const SystemMatrices sys = build_system_matrices(ChannelParams::reference());
  const Eigen::Vector4d x = reference_acquisition_state();
  std::vector<Eigen::Matrix4d> cases{sys.A};
  for (const FaultSpec& s : AllFaults()) cases.push_back(faulted_dynamics(sys, s));
  double worst = 0.0;
  for (const Eigen::Matrix4d& A : cases) {
    const Signal s = simulate_autonomous(A, sys.C, x, kGrid.t_a, kGrid.dt, kGrid.n);
    const std::vector<double> ref = Rk4(A, sys.C, x, kGrid.dt, kGrid.n, 200);
    double diff = 0.0, peak = 0.0;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      diff = std::max(diff, std::abs(s.samples[k] - ref[k]));
      peak = std::max(peak, std::abs(ref[k]));
    }
    worst = std::max(worst, diff / peak);
  }
  return {worst < 1e-9, Fmt("max relative deviation %.2e over healthy and 6 faults", worst)};
}

double WorstRelativeError(const ChannelCoefficients& got, const ChannelCoefficients& want) {
  return std::max({std::abs(got.restrictor_coupling / want.restrictor_coupling - 1.0),
                   std::abs(got.restrictor_damping / want.restrictor_damping - 1.0),
                   std::abs(got.nozzle_coupling / want.nozzle_coupling - 1.0),
                   std::abs(got.nozzle_damping / want.nozzle_damping - 1.0)});
}

Verdict IdentificationRecoversCoefficients() {
  GenerationConfig g = GenerationConfig::defaults();
  g.counts = {{FaultVariant::Healthy, 10}};
  g.noise_fraction = 0.0;
  g.seed = 4;
  const LabeledDataset ds = generate_dataset(g);
  const std::vector<Signal> signals = ds.signals_of(FaultVariant::Healthy);
  const auto t0 = Clock::now();
  IdentifiedModel m;
  try {
    m = identify(signals);
  } catch (const IdentificationError& e) {
    m = e.best();
  }
  const double secs = Seconds(t0);
  const ChannelCoefficients want = ChannelCoefficients::reference();
  const ChannelCoefficients swapped{want.nozzle_coupling, want.nozzle_damping,
                                    want.restrictor_coupling, want.restrictor_damping};
  const ChannelCoefficients got = m.coefficients();
  const double err = std::min(WorstRelativeError(got, want), WorstRelativeError(got, swapped));
  return {err <= 0.01 && secs < 60.0,
          Fmt("coefficients (%.4g, %.4g, %.4g, %.4g), worst relative error %.3g "
              "(swap allowed), %.1f s",
              got.restrictor_coupling, got.restrictor_damping, got.nozzle_coupling,
              got.nozzle_damping, err, secs)};
}

struct ExperimentRun {
  ExperimentReport report;
  double seconds = 0.0;
};

ExperimentRun RunDefaultExperiment() {
  ExperimentConfig cfg;
  cfg.output_dir = fs::temp_directory_path() / "inkwell_acceptance_experiment";
  fs::remove_all(cfg.output_dir);
  const auto t0 = Clock::now();
  ExperimentRun run{run_experiment(cfg), 0.0};
  run.seconds = Seconds(t0);
  return run;
}

Verdict DetectionRates(const ExperimentRun& run) {
  const DetectionMetrics& d = run.report.detection;
  const bool pass = d.counts.total() == 3825 && d.tdr >= 0.95 && d.far <= 0.01 && run.seconds < 300.0;
  return {pass, Fmt("%ld signals, TDR %.2f%%, FAR %.3f%%, %.1f s", d.counts.total(), 100.0 * d.tdr,
                    100.0 * d.far, run.seconds)};
}

Verdict IsolationGrid(const ExperimentRun& run) {
  bool pass = run.seconds < 600.0 && run.report.cells.size() == 12;
  double worst_r = 1.0, worst_gap = 1.0;
  for (const IsolationCell& c : run.report.cells) {
    if (c.input != IsolationInput::Residual) continue;
    worst_r = std::min(worst_r, c.metrics.hma);
    pass = pass && c.metrics.hma >= 0.75;
    for (const IsolationCell& o : run.report.cells) {
      if (o.input != IsolationInput::Output || o.method != c.method ||
          o.training_fraction != c.training_fraction)
        continue;
      worst_gap = std::min(worst_gap, c.metrics.hma - o.metrics.hma);
      pass = pass && c.metrics.hma >= o.metrics.hma - 0.02;
    }
  }
  return {pass, Fmt("%zu cells, min HMA(r) %.3f, min HMA(r) - HMA(y) %.3f, %.1f s",
                    run.report.cells.size(), worst_r, worst_gap, run.seconds)};
}

// Exact minimum over the grid {phi = i / 1000, sum phi = 1}: the last free
// coordinate enters quadratically, so only the grid points next to its
// continuous minimizer need checking.
double GridMinimum(const Eigen::MatrixXd& R, const Eigen::VectorXd& r) {
  const int nf = static_cast<int>(R.cols());
  const int steps = 1000;
  const Eigen::MatrixXd G = R.transpose() * R;
  const Eigen::VectorXd c = R.transpose() * r;
  const double rr = r.squaredNorm();
  auto objective = [&](const Eigen::VectorXd& phi) { return phi.dot(G * phi) - 2.0 * c.dot(phi) + rr; };
  if (nf == 1) return objective(Eigen::VectorXd::Ones(1));

  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(nf);
  std::function<void(int, int)> walk = [&](int index, int remaining) {
    if (index == nf - 2) {
      // phi(nf-2) = t / steps, phi(nf-1) = (remaining - t) / steps.
      const Eigen::VectorXd e = Eigen::VectorXd::Unit(nf, nf - 2) - Eigen::VectorXd::Unit(nf, nf - 1);
      Eigen::VectorXd base = phi;
      base(nf - 2) = 0.0;
      base(nf - 1) = remaining / static_cast<double>(steps);
      const double curv = e.dot(G * e);
      const double slope = 2.0 * e.dot(G * base) - 2.0 * c.dot(e);
      double t_star = curv > 0.0 ? -slope / (2.0 * curv) * steps : (slope < 0.0 ? remaining : 0.0);
      t_star = std::clamp(t_star, 0.0, static_cast<double>(remaining));
      for (double t : {std::floor(t_star), std::ceil(t_star), 0.0, static_cast<double>(remaining)}) {
        Eigen::VectorXd p = base;
        p(nf - 2) = t / steps;
        p(nf - 1) = (remaining - t) / steps;
        best = std::min(best, objective(p));
      }
      return;
    }
    for (int i = 0; i <= remaining; ++i) {
      phi(index) = i / static_cast<double>(steps);
      walk(index + 1, remaining - i);
    }
    phi(index) = 0.0;
  };
  walk(0, steps);
  return best;
}

Verdict SimplexLeastSquares() {
  std::mt19937_64 rng(20240607);
  std::uniform_int_distribution<int> rows(1, 10), cols(1, 4);
  std::normal_distribution<double> g(0.0, 1.0);
  double worst_gap = -std::numeric_limits<double>::infinity();
  double worst_feas = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rows(rng), nf = cols(rng);
    Eigen::MatrixXd R(n, nf);
    Eigen::VectorXd r(n);
    for (int i = 0; i < n; ++i) {
      r(i) = g(rng);
      for (int j = 0; j < nf; ++j) R(i, j) = g(rng);
    }
    const SimplexLsResult res = solve_simplex_ls(R, r);
    const double obj = (R * res.phi - r).squaredNorm();
    const double gap = obj - GridMinimum(R, r);
    const double feas = std::max(std::abs(res.phi.sum() - 1.0), std::max(0.0, -res.phi.minCoeff()));
    worst_gap = std::max(worst_gap, gap);
    worst_feas = std::max(worst_feas, feas);
    if (gap > 1e-5 || feas > 1e-12) ++failures;
  }
  return {failures == 0, Fmt("1000 instances, max(objective - grid minimum) %.2e, "
                             "max infeasibility %.2e, %d failures",
                             worst_gap, worst_feas, failures)};
}

Verdict ReferenceCountMetrics() {
  const DetectionMetrics sim = evaluate_detection(DetectionCounts{2474, 1, 92, 1258});
  const DetectionMetrics exp = evaluate_detection(DetectionCounts{48, 0, 0, 99});
  const bool pass = std::abs(100.0 * sim.tdr - 97.6) <= 0.05 && std::abs(100.0 * sim.far - 0.04) <= 0.005 &&
                    exp.tdr == 1.0 && exp.far == 0.0;
  return {pass, Fmt("simulated TDR %.3f%% FAR %.4f%%, bench TDR %.1f%% FAR %.1f%%",
                    100.0 * sim.tdr, 100.0 * sim.far, 100.0 * exp.tdr, 100.0 * exp.far)};
}

Verdict DiscreteFilter() {
  const ResidualFilter f = synthesize_filter(IdentifiedModel::reference(kGrid));
  const double dt = kGrid.dt;
  const Eigen::VectorXcd ev = f.realization.A.eigenvalues();
  int on_circle = 0;
  double circle_err = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double d = std::abs(std::abs(ev(i)) - 1.0);
    if (d <= 1e-6) {
      ++on_circle;
      circle_err = std::max(circle_err, d);
    }
  }
  double mag_err = 0.0, phase_err = 0.0;
  for (int i = 1; i <= 400; ++i) {
    const double w = 0.1 / dt * i / 400.0;
    if (std::abs(w - f.polys.omega_r) < 1e-3 * f.polys.omega_r) continue;
    const std::complex<double> hd = f.realization.y_response(w, dt);
    const std::complex<double> hc = continuous_y_response(f.polys, w);
    const std::complex<double> delay = std::exp(std::complex<double>(0.0, -0.5 * w * dt));
    mag_err = std::max(mag_err, std::abs(std::abs(hd) / std::abs(hc) - 1.0));
    phase_err = std::max(phase_err, std::abs(hd / (hc * delay) - 1.0));
  }
  const bool pass = on_circle == 2 && circle_err <= 1e-12 && mag_err <= 0.01 && phase_err <= 0.01;
  return {pass, Fmt("%d poles on the unit circle (| |z|-1 | <= %.1e), gain error %.3f%%, "
                    "delay-compensated response error %.3f%% up to 0.1/dt",
                    on_circle, circle_err, 100.0 * mag_err, 100.0 * phase_err)};
}

Verdict ReproducibleReports(const std::string& cli) {
  const fs::path root = fs::temp_directory_path() / "inkwell_acceptance_cli";
  fs::remove_all(root);
  std::string reports[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd = "'" + cli + "' experiment --out '" + out.string() + "' > /dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "inkwell experiment exited with an error"};
    reports[i] = read_text_file(out / "report.json");
  }
  const bool same = !reports[0].empty() && reports[0] == reports[1];
  return {same, Fmt("report.json %zu bytes, %s", reports[0].size(), same ? "identical" : "differs")};
}

}  // namespace
}  // namespace inkwell

int main(int argc, char** argv) {
  using namespace inkwell;
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path to inkwell>\n", argv[0]);
    return 2;
  }
  int failed = 0;
  auto report = [&](int id, const std::function<Verdict()>& check) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s criterion %d: %s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str());
    std::fflush(stdout);
  };
  report(1, NullSpaceAndSensitivity);
  report(2, HealthyResidualVanishes);
  report(3, SimulatorMatchesIntegrator);
  report(4, IdentificationRecoversCoefficients);
  std::optional<ExperimentRun> run;
  std::string run_error;
  try {
    run = RunDefaultExperiment();
  } catch (const std::exception& e) {
    run_error = e.what();
  }
  report(5, [&] { return run ? DetectionRates(*run) : Verdict{false, run_error}; });
  report(6, [&] { return run ? IsolationGrid(*run) : Verdict{false, run_error}; });
  report(7, SimplexLeastSquares);
  report(8, ReferenceCountMetrics);
  report(9, DiscreteFilter);
  const std::string cli = argv[1];
  report(10, [&] { return ReproducibleReports(cli); });
  std::printf("%d of 10 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
