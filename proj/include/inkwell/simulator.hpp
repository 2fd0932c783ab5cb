#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inkwell/core_model.hpp"

namespace inkwell {

// Uniformly sampled sensing signal. samples[k] is the value at t_a + k*dt.
struct Signal {
  std::vector<double> samples;
  double t_a = 0.0;
  double dt = 0.0;

  std::size_t size() const { return samples.size(); }
  double t_f() const { return t_a + static_cast<double>(samples.size() - 1) * dt; }
  double peak() const;

  // Throws ValidationError on dt <= 0, empty samples or non-finite values.
  void validate() const;
  bool same_grid(const Signal& other) const;
};

// samples[k] = C exp(A k dt) x_a, k = 0..n-1, using one exponential of A dt
// applied recursively in balanced coordinates.
Signal simulate_autonomous(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C,
                           const Eigen::Vector4d& x_a, double t_a, double dt, int n);

// Adds i.i.d. N(0, sigma^2) noise. Deterministic in (s, sigma, seed).
Signal add_noise(const Signal& s, double sigma, std::uint64_t seed);

struct SampleGrid {
  double t_a = 0.0;
  double dt = 1e-7;
  int n = 500;

  void validate() const;
};

struct GenerationConfig {
  std::map<FaultVariant, int> counts;
  std::map<FaultVariant, FaultSpec> faults;  // nominal factors per variant
  double delta_jitter = 0.2;                 // factor *= 1 + U(-j, j)
  double state_jitter = 0.1;                 // x_a[i] *= 1 + U(-j, j)
  double noise_fraction = 0.02;              // sigma = fraction * nominal healthy peak
  std::uint64_t seed = 1;
  SampleGrid grid;
  ChannelParams params = ChannelParams::reference();
  Eigen::Vector4d x_a = reference_acquisition_state();

  // 2475 healthy and 225 per fault class.
  static GenerationConfig defaults();

  int count(FaultVariant v) const;
  int total() const;
  void validate() const;
  double noise_sigma() const;
};

void to_json(nlohmann::json& j, const GenerationConfig& c);
void from_json(const nlohmann::json& j, GenerationConfig& c);
void to_json(nlohmann::json& j, const FaultSpec& s);
void from_json(const nlohmann::json& j, FaultSpec& s);
void to_json(nlohmann::json& j, const ChannelParams& p);
void from_json(const nlohmann::json& j, ChannelParams& p);
void to_json(nlohmann::json& j, const SampleGrid& g);
void from_json(const nlohmann::json& j, SampleGrid& g);

struct LabeledSignal {
  Signal signal;
  FaultVariant label = FaultVariant::Healthy;
};

struct LabeledDataset {
  std::vector<LabeledSignal> entries;
  std::uint64_t seed = 0;
  std::string config_digest;
  nlohmann::json config;  // generation provenance, null when unknown

  std::size_t size() const { return entries.size(); }
  std::vector<Signal> signals_of(FaultVariant label) const;
  // Throws ValidationError unless all entries share one grid.
  void validate() const;
};

// Entry i draws from its own stream seeded by (cfg.seed, i), so the result
// does not depend on evaluation order. Entries are grouped by class in
// Healthy, EC, FBN, PBN, SDN, IDN, DDN order.
LabeledDataset generate_dataset(const GenerationConfig& cfg);

// Simulates a single entry of generate_dataset.
LabeledSignal generate_entry(const GenerationConfig& cfg, FaultVariant label, std::size_t index);

}  // namespace inkwell
