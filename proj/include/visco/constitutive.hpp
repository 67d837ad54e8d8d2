#pragma once

// Extended Maxwell / extended standard linear solid materials: relaxation
// kernels, stress from internal (dashpot strain) variables, and the exact
// exponential update of those variables over a time step.

#include <optional>
#include <string>
#include <vector>

#include "visco/tensor.hpp"

namespace visco {

/// Spring with modulus C in series with an optional dashpot of viscosity eta.
struct MaxwellUnit {
  IsotropicModuli moduli;
  std::optional<double> viscosity;  ///< Pa s; empty for a pure spring

  bool viscous() const { return viscosity.has_value(); }
  friend bool operator==(const MaxwellUnit&, const MaxwellUnit&) = default;
};

enum class MaterialKind { EMM, ESLS, Elastic };

std::string to_string(MaterialKind k);

class Material {
public:
  /// Validates and reorders the units so that viscous ones come first.
  /// Throws std::invalid_argument listing every violated condition.
  Material(std::vector<MaxwellUnit> units, double rho);

  int dim() const { return units_.front().moduli.dim; }
  const std::vector<MaxwellUnit>& units() const { return units_; }
  int n_units() const { return static_cast<int>(units_.size()); }
  int n_viscous() const { return n_viscous_; }
  double rho() const { return rho_; }
  MaterialKind kind() const;

  /// Sum of the unit operator norms.
  double norm_sum() const;
  /// Sum of the unit shear moduli.
  double mu_sum() const;

  friend bool operator==(const Material&, const Material&) = default;

private:
  std::vector<MaxwellUnit> units_;
  int n_viscous_ = 0;
  double rho_ = 1.0;
};

struct ExpTerm {
  double amplitude;  ///< Pa
  double rate;       ///< 1/s
};

/// G(t) restricted to the volumetric and deviatoric subspaces:
/// g(t) = sum_k a_k exp(-r_k t) + const.
struct RelaxationKernel {
  int dim = 3;
  std::vector<ExpTerm> vol_terms, dev_terms;
  double vol_const = 0.0, dev_const = 0.0;

  double g_vol(double t) const;
  double g_dev(double t) const;
  double dg_vol(double t) const;
  double dg_dev(double t) const;
  /// G(t) e.
  SymTensor apply(double t, const SymTensor& e) const;
};

RelaxationKernel relaxation_kernel(const Material& m);

/// Dashpot strain of one viscous unit at one point: phiV * I + phiD.
struct UnitMemory {
  double phiV = 0.0;
  SymTensor phiD;

  explicit UnitMemory(int dim = 3) : phiD(dim) {}
  SymTensor total() const { return phiV * SymTensor::identity(phiD.dim()) + phiD; }
};

/// Memory of every viscous unit at one point.
using MemoryState = std::vector<UnitMemory>;

MemoryState zero_memory(const Material& m);

/// sigma = sum_j [lambda_j tr(e) I + 2 mu_j e - (d lambda_j + 2 mu_j) phiV_j I - 2 mu_j phiD_j].
SymTensor stress_internal(const Material& m, const SymTensor& e, const MemoryState& mem);

/// Pointwise stress over a field of strains and memories. Throws on length mismatch.
std::vector<SymTensor> stress_internal(const Material& m, const std::vector<SymTensor>& e,
                                       const std::vector<MemoryState>& mem);

/// G(0) e(t) + int_0^t G'(t - s) e(s) ds by the trapezoidal rule on a strain
/// history sampled at s_k = k dt. The last partial interval interpolates e linearly.
/// Throws std::out_of_range if t lies beyond the history.
SymTensor stress_convolution(const RelaxationKernel& k, const std::vector<SymTensor>& history, double dt, double t);

/// Weights of the exact update for y' = r (f - y) with f linear over the step:
/// y1 = a y0 + b f0 + c (f1 - f0).
struct EtdWeights {
  double a, b, c;
};
EtdWeights etd_weights(double rate, double dt);

/// Advances one unit's dashpot strain over dt for a strain varying linearly from
/// e_old to e_new. Throws for dt <= 0 or an elastic unit.
UnitMemory memory_update(const MaxwellUnit& unit, const UnitMemory& mem, const SymTensor& e_old,
                         const SymTensor& e_new, double dt);

}  // namespace visco
