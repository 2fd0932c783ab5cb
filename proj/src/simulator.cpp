#include "inkwell/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "inkwell/digest.hpp"
#include "inkwell/errors.hpp"
#include "inkwell/linalg.hpp"

namespace inkwell {

double Signal::peak() const {
  double m = 0.0;
  for (double v : samples) m = std::max(m, std::abs(v));
  return m;
}

void Signal::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("signal dt must be positive");
  if (!std::isfinite(t_a)) throw ValidationError("signal t_a must be finite");
  if (samples.empty()) throw ValidationError("signal has no samples");
  for (double v : samples) {
    if (!std::isfinite(v)) throw ValidationError("signal has non-finite samples");
  }
}

bool Signal::same_grid(const Signal& other) const {
  return t_a == other.t_a && dt == other.dt && samples.size() == other.samples.size();
}

Signal simulate_autonomous(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C,
                           const Eigen::Vector4d& x_a, double t_a, double dt, int n) {
  if (n < 2) throw ValidationError("simulate_autonomous needs n >= 2");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("simulate_autonomous needs dt > 0");

  const Eigen::Vector4d d = balancing_scales(A);
  const Eigen::Matrix4d balanced = d.cwiseInverse().asDiagonal() * A * d.asDiagonal();
  const Eigen::Matrix4d phi = expm(balanced * dt);
  const Eigen::RowVector4d c = C * d.asDiagonal();
  Eigen::Vector4d z = d.cwiseInverse().asDiagonal() * x_a;

  Signal s;
  s.t_a = t_a;
  s.dt = dt;
  s.samples.resize(static_cast<std::size_t>(n));
  for (auto& v : s.samples) {
    v = c.dot(z);
    if (!std::isfinite(v)) throw SimulationError("simulated signal diverged");
    z = phi * z;
  }
  return s;
}

Signal add_noise(const Signal& s, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ValidationError("noise sigma must be >= 0");
  Signal out = s;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  for (auto& v : out.samples) v += noise(rng);
  return out;
}

void SampleGrid::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("grid dt must be positive");
  if (!std::isfinite(t_a)) throw ValidationError("grid t_a must be finite");
  if (n < 2) throw ValidationError("grid needs at least 2 samples");
}

GenerationConfig GenerationConfig::defaults() {
  GenerationConfig c;
  c.counts[FaultVariant::Healthy] = 2475;
  for (FaultVariant v : kFaultVariants) {
    c.counts[v] = 225;
    c.faults[v] = FaultSpec::default_for(v);
  }
  return c;
}

int GenerationConfig::count(FaultVariant v) const {
  const auto it = counts.find(v);
  return it == counts.end() ? 0 : it->second;
}

int GenerationConfig::total() const {
  int t = 0;
  for (const auto& [v, n] : counts) t += n;
  return t;
}

void GenerationConfig::validate() const {
  for (const auto& [v, n] : counts) {
    if (n < 0) throw ValidationError("class counts must be >= 0");
  }
  for (FaultVariant v : kFaultVariants) {
    if (count(v) == 0) continue;
    const auto it = faults.find(v);
    if (it == faults.end()) {
      throw ValidationError("no fault factors for " + std::string(to_string(v)));
    }
    if (it->second.variant != v) throw ValidationError("fault spec variant mismatch");
    it->second.validate();
  }
  if (!(delta_jitter >= 0.0 && delta_jitter < 1.0)) {
    throw ValidationError("delta_jitter must lie in [0, 1)");
  }
  if (!(state_jitter >= 0.0 && state_jitter < 1.0)) {
    throw ValidationError("state_jitter must lie in [0, 1)");
  }
  if (!(noise_fraction >= 0.0) || !std::isfinite(noise_fraction)) {
    throw ValidationError("noise_fraction must be >= 0");
  }
  grid.validate();
  params.validate();
  if (!x_a.allFinite()) throw ValidationError("x_a must be finite");
}

double GenerationConfig::noise_sigma() const {
  if (noise_fraction == 0.0) return 0.0;
  const SystemMatrices m = build_system_matrices(params);
  return noise_fraction * simulate_autonomous(m.A, m.C, x_a, grid.t_a, grid.dt, grid.n).peak();
}

std::vector<Signal> LabeledDataset::signals_of(FaultVariant label) const {
  std::vector<Signal> out;
  for (const auto& e : entries) {
    if (e.label == label) out.push_back(e.signal);
  }
  return out;
}

void LabeledDataset::validate() const {
  for (const auto& e : entries) {
    e.signal.validate();
    if (!e.signal.same_grid(entries.front().signal)) {
      throw ValidationError("dataset entries do not share a sampling grid");
    }
  }
}

namespace {

std::mt19937_64 entry_stream(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

LabeledSignal simulate_entry(const GenerationConfig& cfg, const SystemMatrices& base,
                             double sigma, FaultVariant label, std::size_t index) {
  std::mt19937_64 rng = entry_stream(cfg.seed, index);
  std::uniform_real_distribution<double> delta(-cfg.delta_jitter, cfg.delta_jitter);
  std::uniform_real_distribution<double> state(-cfg.state_jitter, cfg.state_jitter);

  Eigen::Matrix4d A = base.A;
  if (label != FaultVariant::Healthy) {
    FaultSpec spec = cfg.faults.at(label);
    for (auto& [param, factor] : spec.factors) factor *= 1.0 + delta(rng);
    A = faulted_dynamics(base, spec);
  }
  Eigen::Vector4d x = cfg.x_a;
  for (int i = 0; i < 4; ++i) x(i) *= 1.0 + state(rng);

  Signal s = simulate_autonomous(A, base.C, x, cfg.grid.t_a, cfg.grid.dt, cfg.grid.n);
  return {add_noise(s, sigma, rng()), label};
}

}  // namespace

LabeledSignal generate_entry(const GenerationConfig& cfg, FaultVariant label, std::size_t index) {
  cfg.validate();
  return simulate_entry(cfg, build_system_matrices(cfg.params), cfg.noise_sigma(), label, index);
}

LabeledDataset generate_dataset(const GenerationConfig& cfg) {
  cfg.validate();
  const SystemMatrices base = build_system_matrices(cfg.params);
  const double sigma = cfg.noise_sigma();

  LabeledDataset ds;
  ds.seed = cfg.seed;
  ds.config = cfg;
  ds.config_digest = sha256_hex(ds.config.dump());
  ds.entries.reserve(static_cast<std::size_t>(cfg.total()));
  std::size_t index = 0;
  for (FaultVariant label : kAllClasses) {
    for (int i = 0; i < cfg.count(label); ++i) {
      ds.entries.push_back(simulate_entry(cfg, base, sigma, label, index++));
    }
  }
  return ds;
}

// JSON ----------------------------------------------------------------------

void to_json(nlohmann::json& j, const FaultSpec& s) {
  j = nlohmann::json{{"variant", std::string(to_string(s.variant))}};
  nlohmann::json deltas = nlohmann::json::object();
  for (const auto& [p, v] : s.factors) deltas[std::string(to_string(p))] = v;
  j["deltas"] = deltas;
}

void from_json(const nlohmann::json& j, FaultSpec& s) {
  s.variant = parse_fault_variant(j.at("variant").get<std::string>());
  s.factors.clear();
  if (j.contains("deltas")) {
    for (const auto& [k, v] : j.at("deltas").items()) {
      s.factors[parse_fault_parameter(k)] = v.get<double>();
    }
  }
  s.validate();
}

void to_json(nlohmann::json& j, const ChannelParams& p) {
  j = nlohmann::json{{"I_r", p.restrictor_inertance},   {"I_n", p.nozzle_inertance},
                     {"R_r", p.restrictor_resistance},  {"R_n", p.nozzle_resistance},
                     {"beta_t", p.total_compliance},    {"b", p.actuator_constant},
                     {"c", p.acquisition_constant}};
}

void from_json(const nlohmann::json& j, ChannelParams& p) {
  p.restrictor_inertance = j.at("I_r").get<double>();
  p.nozzle_inertance = j.at("I_n").get<double>();
  p.restrictor_resistance = j.at("R_r").get<double>();
  p.nozzle_resistance = j.at("R_n").get<double>();
  p.total_compliance = j.at("beta_t").get<double>();
  p.actuator_constant = j.at("b").get<double>();
  p.acquisition_constant = j.at("c").get<double>();
  p.validate();
}

void to_json(nlohmann::json& j, const SampleGrid& g) {
  j = nlohmann::json{{"t_a", g.t_a}, {"dt", g.dt}, {"n", g.n}};
}

void from_json(const nlohmann::json& j, SampleGrid& g) {
  g.t_a = j.value("t_a", g.t_a);
  g.dt = j.value("dt", g.dt);
  g.n = j.value("n", g.n);
  g.validate();
}

void to_json(nlohmann::json& j, const GenerationConfig& c) {
  nlohmann::json counts = nlohmann::json::object();
  for (FaultVariant v : kAllClasses) counts[std::string(to_string(v))] = c.count(v);
  nlohmann::json faults = nlohmann::json::array();
  for (const auto& [v, spec] : c.faults) faults.push_back(spec);
  j = nlohmann::json{{"counts", counts},
                     {"faults", faults},
                     {"delta_jitter", c.delta_jitter},
                     {"state_jitter", c.state_jitter},
                     {"noise_fraction", c.noise_fraction},
                     {"seed", c.seed},
                     {"grid", c.grid},
                     {"params", c.params},
                     {"x_a", std::vector<double>(c.x_a.data(), c.x_a.data() + 4)}};
}

void from_json(const nlohmann::json& j, GenerationConfig& c) {
  c = GenerationConfig::defaults();
  if (j.contains("counts")) {
    for (const auto& [k, v] : j.at("counts").items()) {
      c.counts[parse_fault_variant(k)] = v.get<int>();
    }
  }
  if (j.contains("faults")) {
    for (const auto& f : j.at("faults")) {
      const FaultSpec spec = f.get<FaultSpec>();
      c.faults[spec.variant] = spec;
    }
  }
  c.delta_jitter = j.value("delta_jitter", c.delta_jitter);
  c.state_jitter = j.value("state_jitter", c.state_jitter);
  c.noise_fraction = j.value("noise_fraction", c.noise_fraction);
  c.seed = j.value("seed", c.seed);
  if (j.contains("grid")) c.grid = j.at("grid").get<SampleGrid>();
  if (j.contains("params")) c.params = j.at("params").get<ChannelParams>();
  if (j.contains("x_a")) {
    const auto v = j.at("x_a").get<std::vector<double>>();
    if (v.size() != 4) throw ValidationError("x_a must have 4 entries");
    c.x_a = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
  }
  c.validate();
}

}  // namespace inkwell
