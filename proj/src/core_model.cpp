#include "inkwell/core_model.hpp"

#include <cmath>

#include "inkwell/errors.hpp"

namespace inkwell {
namespace {

void require_positive(double v, const char* name) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw ValidationError(std::string("channel parameter ") + name +
                          " must be finite and positive");
  }
}

}  // namespace

void ChannelParams::validate() const {
  require_positive(restrictor_inertance, "restrictor_inertance");
  require_positive(nozzle_inertance, "nozzle_inertance");
  require_positive(restrictor_resistance, "restrictor_resistance");
  require_positive(nozzle_resistance, "nozzle_resistance");
  require_positive(total_compliance, "total_compliance");
  require_positive(actuator_constant, "actuator_constant");
  require_positive(acquisition_constant, "acquisition_constant");
}

ChannelParams ChannelParams::reference() {
  ChannelParams p;
  p.total_compliance = 1e-20;
  p.restrictor_inertance = 1.0 / (4.33e11 * p.total_compliance);
  p.nozzle_inertance = 1.0 / (6.17e11 * p.total_compliance);
  p.restrictor_resistance = 1.59e5 * p.restrictor_inertance;
  p.nozzle_resistance = 1.75e5 * p.nozzle_inertance;
  p.actuator_constant = 1e-11;
  p.acquisition_constant = 1.0;
  return p;
}

Eigen::Vector4d reference_acquisition_state() { return {0.21, 0.21, 0.16, 0.22}; }

SystemMatrices build_system_matrices(const ChannelParams& p) {
  p.validate();
  const double ir_bt = p.restrictor_inertance * p.total_compliance;
  const double in_bt = p.nozzle_inertance * p.total_compliance;

  SystemMatrices m;
  m.A(0, 2) = 1.0;
  m.A(1, 3) = 1.0;
  m.A(2, 0) = m.A(2, 1) = -1.0 / ir_bt;
  m.A(2, 2) = -p.restrictor_resistance / p.restrictor_inertance;
  m.A(3, 0) = m.A(3, 1) = -1.0 / in_bt;
  m.A(3, 3) = -p.nozzle_resistance / p.nozzle_inertance;
  m.Bu << 0.0, 0.0, p.actuator_constant / ir_bt, p.actuator_constant / in_bt;
  m.C << 0.0, 0.0, p.acquisition_constant, p.acquisition_constant;
  return m;
}

bool has_channel_structure(const Eigen::Matrix4d& A, const Eigen::RowVector4d& C) {
  const bool rows12 = A.row(0) == Eigen::RowVector4d(0, 0, 1, 0) &&
                      A.row(1) == Eigen::RowVector4d(0, 0, 0, 1);
  const bool ties = A(2, 0) == A(2, 1) && A(3, 0) == A(3, 1);
  const bool zeros = A(2, 3) == 0.0 && A(3, 2) == 0.0;
  const bool output = C(0) == 0.0 && C(1) == 0.0 && C(2) == C(3);
  return rows12 && ties && zeros && output;
}

std::string_view to_string(FaultVariant v) {
  switch (v) {
    case FaultVariant::Healthy: return "Healthy";
    case FaultVariant::EC: return "EC";
    case FaultVariant::FBN: return "FBN";
    case FaultVariant::PBN: return "PBN";
    case FaultVariant::SDN: return "SDN";
    case FaultVariant::IDN: return "IDN";
    case FaultVariant::DDN: return "DDN";
  }
  return "?";
}

FaultVariant parse_fault_variant(std::string_view name) {
  for (FaultVariant v : kAllClasses) {
    if (to_string(v) == name) return v;
  }
  throw ValidationError("unknown fault variant '" + std::string(name) + "'");
}

std::string_view to_string(FaultParameter p) {
  switch (p) {
    case FaultParameter::RestrictorInertance: return "I_r";
    case FaultParameter::NozzleInertance: return "I_n";
    case FaultParameter::NozzleResistance: return "R_n";
  }
  return "?";
}

FaultParameter parse_fault_parameter(std::string_view name) {
  for (FaultParameter p : {FaultParameter::RestrictorInertance, FaultParameter::NozzleInertance,
                           FaultParameter::NozzleResistance}) {
    if (to_string(p) == name) return p;
  }
  throw ValidationError("unknown fault parameter '" + std::string(name) + "'");
}

double FaultSpec::factor(FaultParameter p) const {
  const auto it = factors.find(p);
  return it == factors.end() ? 1.0 : it->second;
}

void FaultSpec::validate() const {
  using P = FaultParameter;
  std::vector<P> allowed;
  bool increase = true;
  switch (variant) {
    case FaultVariant::Healthy:
      if (!factors.empty()) throw ValidationError("Healthy fault spec must carry no deltas");
      return;
    case FaultVariant::EC:
      allowed = {P::RestrictorInertance, P::NozzleInertance};
      increase = false;
      break;
    case FaultVariant::FBN:
    case FaultVariant::PBN:
      allowed = {P::NozzleInertance, P::NozzleResistance};
      break;
    case FaultVariant::SDN:
    case FaultVariant::IDN:
    case FaultVariant::DDN:
      allowed = {P::NozzleResistance};
      break;
  }
  if (factors.empty()) {
    throw ValidationError(std::string(to_string(variant)) + " fault spec needs deltas");
  }
  for (const auto& [param, value] : factors) {
    if (std::find(allowed.begin(), allowed.end(), param) == allowed.end()) {
      throw ValidationError(std::string(to_string(variant)) + " cannot perturb " +
                            std::string(to_string(param)));
    }
    if (!std::isfinite(value) || value <= 0.0) {
      throw ValidationError("fault factors must be finite and positive");
    }
    if (increase ? value <= 1.0 : value >= 1.0) {
      throw ValidationError(std::string(to_string(variant)) + " must " +
                            (increase ? "increase " : "decrease ") +
                            std::string(to_string(param)));
    }
  }
}

FaultSpec FaultSpec::default_for(FaultVariant v) {
  using P = FaultParameter;
  FaultSpec s{v, {}};
  switch (v) {
    case FaultVariant::Healthy: break;
    case FaultVariant::EC: s.factors = {{P::RestrictorInertance, 0.25}, {P::NozzleInertance, 0.25}}; break;
    case FaultVariant::FBN: s.factors = {{P::NozzleInertance, 4.0}, {P::NozzleResistance, 8.0}}; break;
    case FaultVariant::PBN: s.factors = {{P::NozzleInertance, 1.5}, {P::NozzleResistance, 2.0}}; break;
    case FaultVariant::SDN: s.factors = {{P::NozzleResistance, 1.5}}; break;
    case FaultVariant::IDN: s.factors = {{P::NozzleResistance, 3.0}}; break;
    case FaultVariant::DDN: s.factors = {{P::NozzleResistance, 8.0}}; break;
  }
  return s;
}

Eigen::Matrix4d build_fault_matrix(const SystemMatrices& base, const FaultSpec& spec) {
  if (spec.variant == FaultVariant::Healthy) {
    throw ValidationError("the healthy variant has no fault matrix");
  }
  spec.validate();

  // Every row-3/4 coefficient of A is proportional to 1/I_r or 1/I_n, and
  // the damping terms additionally to R_r or R_n; R_r never changes.
  const double kr = 1.0 / spec.factor(FaultParameter::RestrictorInertance);
  const double kn = 1.0 / spec.factor(FaultParameter::NozzleInertance);
  const double kd = spec.factor(FaultParameter::NozzleResistance) * kn;
  const Eigen::Matrix4d& A = base.A;

  Eigen::Matrix4d perturbed = A;
  perturbed(2, 0) = A(2, 0) * kr;
  perturbed(2, 1) = A(2, 1) * kr;
  perturbed(2, 2) = A(2, 2) * kr;
  perturbed(3, 0) = A(3, 0) * kn;
  perturbed(3, 1) = A(3, 1) * kn;
  perturbed(3, 3) = A(3, 3) * kd;
  return perturbed - A;
}

Eigen::Matrix4d faulted_dynamics(const SystemMatrices& base, const FaultSpec& spec) {
  if (spec.variant == FaultVariant::Healthy) return base.A;
  return base.A + build_fault_matrix(base, spec);
}

Eigen::Matrix4d fault_pattern(FaultVariant v) {
  Eigen::Matrix4d p = Eigen::Matrix4d::Zero();
  switch (v) {
    case FaultVariant::Healthy:
      break;
    case FaultVariant::EC:
      p(2, 0) = p(2, 1) = p(2, 2) = 1.0;
      p(3, 0) = p(3, 1) = p(3, 3) = 1.0;
      break;
    case FaultVariant::FBN:
    case FaultVariant::PBN:
      p(3, 0) = p(3, 1) = p(3, 3) = 1.0;
      break;
    case FaultVariant::SDN:
    case FaultVariant::IDN:
    case FaultVariant::DDN:
      p(3, 3) = 1.0;
      break;
  }
  return p;
}

}  // namespace inkwell
