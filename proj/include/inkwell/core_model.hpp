#pragma once

// Lumped ink-channel model: restrictor and nozzle flows coupled through the
// chamber compliance. State x = (V_r, V_n, dV_r/dt, dV_n/dt), scalar input u
// (actuation voltage), scalar output y (piezo self-sensing signal).

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace inkwell {

struct ChannelParams {
  double restrictor_inertance = 0.0;   // [Pa s^2 / m^3]
  double nozzle_inertance = 0.0;       // [Pa s^2 / m^3]
  double restrictor_resistance = 0.0;  // [Pa s / m^3]
  double nozzle_resistance = 0.0;      // [Pa s / m^3]
  double total_compliance = 0.0;       // [m^3 / Pa]
  double actuator_constant = 0.0;      // [m^3 / V]
  double acquisition_constant = 0.0;   // [V s / m^3]

  // Throws ValidationError unless every field is finite and > 0.
  void validate() const;

  // Parameters whose state matrix reproduces the reference identified
  // channel: 1/(I_r b_t) = 4.33e11, R_r/I_r = 1.59e5, 1/(I_n b_t) = 6.17e11,
  // R_n/I_n = 1.75e5, c = 1.
  static ChannelParams reference();
};

// Acquisition state of the reference channel.
Eigen::Vector4d reference_acquisition_state();

struct SystemMatrices {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Vector4d Bu = Eigen::Vector4d::Zero();
  Eigen::RowVector4d C = Eigen::RowVector4d::Zero();
};

SystemMatrices build_system_matrices(const ChannelParams& p);

// True when A, C carry the zero/one/tied structure of the channel model.
bool has_channel_structure(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C);

enum class FaultVariant { Healthy, EC, FBN, PBN, SDN, IDN, DDN };

inline constexpr std::array<FaultVariant, 6> kFaultVariants{
    FaultVariant::EC,  FaultVariant::FBN, FaultVariant::PBN,
    FaultVariant::SDN, FaultVariant::IDN, FaultVariant::DDN};

inline constexpr std::array<FaultVariant, 7> kAllClasses{
    FaultVariant::Healthy, FaultVariant::EC,  FaultVariant::FBN, FaultVariant::PBN,
    FaultVariant::SDN,     FaultVariant::IDN, FaultVariant::DDN};

std::string_view to_string(FaultVariant v);
// Throws ValidationError for unknown names.
FaultVariant parse_fault_variant(std::string_view name);

// Physical parameters a fault may perturb.
enum class FaultParameter { RestrictorInertance, NozzleInertance, NozzleResistance };

std::string_view to_string(FaultParameter p);  // "I_r", "I_n", "R_n"
FaultParameter parse_fault_parameter(std::string_view name);

// A fault variant and the multiplicative factors it applies to the healthy
// parameters (1.5 means +50%). Healthy carries no factors.
struct FaultSpec {
  FaultVariant variant = FaultVariant::Healthy;
  std::map<FaultParameter, double> factors;

  double factor(FaultParameter p) const;

  // Checks the parameter set and direction of change for the variant.
  void validate() const;

  // Default magnitudes used by the dataset generator.
  static FaultSpec default_for(FaultVariant v);
};

// B_f * f with f = 1: the change in A produced by the fault. Nonzero entries
// are confined to rows 3-4 (1-based) of the general fault structure.
Eigen::Matrix4d build_fault_matrix(const SystemMatrices& base, const FaultSpec& spec);

// A for Healthy (bit-exact), A + build_fault_matrix otherwise.
Eigen::Matrix4d faulted_dynamics(const SystemMatrices& base, const FaultSpec& spec);

// Unit-entry matrix marking which entries of A a variant can change.
Eigen::Matrix4d fault_pattern(FaultVariant v);

}  // namespace inkwell
