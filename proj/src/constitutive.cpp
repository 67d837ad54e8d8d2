#include "visco/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace visco {

std::string to_string(MaterialKind k) {
  switch (k) {
    case MaterialKind::EMM: return "EMM";
    case MaterialKind::ESLS: return "ESLS";
    case MaterialKind::Elastic: return "Elastic";
  }
  return "?";
}

Material::Material(std::vector<MaxwellUnit> units, double rho) : units_(std::move(units)), rho_(rho) {
  std::ostringstream err;
  if (units_.empty()) err << "material needs at least one unit; ";
  if (!(rho_ > 0.0) || !std::isfinite(rho_)) err << "rho must be positive; ";
  for (std::size_t j = 0; j < units_.size(); ++j) {
    const auto& u = units_[j];
    if (u.moduli.dim != units_.front().moduli.dim) err << "units[" << j << "] dimension differs; ";
    if (!std::isfinite(u.moduli.lambda) || !std::isfinite(u.moduli.mu) || !u.moduli.is_strongly_convex())
      err << "units[" << j << "] is not strongly convex (mu > 0, d*lambda + 2*mu > 0); ";
    if (u.viscous() && !(*u.viscosity > 0.0 && std::isfinite(*u.viscosity)))
      err << "units[" << j << "].viscosity must be positive; ";
  }
  const std::string msg = err.str();
  if (!msg.empty()) throw std::invalid_argument("invalid material: " + msg.substr(0, msg.size() - 2));
  std::stable_partition(units_.begin(), units_.end(), [](const MaxwellUnit& u) { return u.viscous(); });
  n_viscous_ = static_cast<int>(std::count_if(units_.begin(), units_.end(), [](auto& u) { return u.viscous(); }));
}

MaterialKind Material::kind() const {
  if (n_viscous_ == n_units()) return MaterialKind::EMM;
  if (n_viscous_ == 0) return MaterialKind::Elastic;
  return MaterialKind::ESLS;
}

double Material::norm_sum() const {
  double s = 0.0;
  for (const auto& u : units_) s += operator_norm(u.moduli);
  return s;
}

double Material::mu_sum() const {
  double s = 0.0;
  for (const auto& u : units_) s += u.moduli.mu;
  return s;
}

namespace {

double sum_terms(const std::vector<ExpTerm>& terms, double c, double t) {
  double s = c;
  for (const auto& k : terms) s += k.amplitude * std::exp(-k.rate * t);
  return s;
}

double sum_rates(const std::vector<ExpTerm>& terms, double t) {
  double s = 0.0;
  for (const auto& k : terms) s -= k.amplitude * k.rate * std::exp(-k.rate * t);
  return s;
}

}  // namespace

double RelaxationKernel::g_vol(double t) const { return sum_terms(vol_terms, vol_const, t); }
double RelaxationKernel::g_dev(double t) const { return sum_terms(dev_terms, dev_const, t); }
double RelaxationKernel::dg_vol(double t) const { return sum_rates(vol_terms, t); }
double RelaxationKernel::dg_dev(double t) const { return sum_rates(dev_terms, t); }

SymTensor RelaxationKernel::apply(double t, const SymTensor& e) const {
  const VolDev vd = vol_dev_split(e);
  return g_vol(t) * vd.vol + g_dev(t) * vd.dev;
}

RelaxationKernel relaxation_kernel(const Material& m) {
  RelaxationKernel k;
  k.dim = m.dim();
  for (const auto& u : m.units()) {
    const double kv = u.moduli.bulk_eigenvalue(), kd = u.moduli.shear_eigenvalue();
    if (u.viscous()) {
      k.vol_terms.push_back({kv, kv / *u.viscosity});
      k.dev_terms.push_back({kd, kd / *u.viscosity});
    } else {
      k.vol_const += kv;
      k.dev_const += kd;
    }
  }
  return k;
}

MemoryState zero_memory(const Material& m) { return MemoryState(m.n_viscous(), UnitMemory(m.dim())); }

SymTensor stress_internal(const Material& m, const SymTensor& e, const MemoryState& mem) {
  if (static_cast<int>(mem.size()) != m.n_viscous())
    throw std::invalid_argument("memory state does not match the number of viscous units");
  const int d = m.dim();
  SymTensor s(d);
  const double tr = e.trace();
  for (int j = 0; j < m.n_units(); ++j) {
    const auto& c = m.units()[j].moduli;
    double iso = c.lambda * tr;
    s += 2.0 * c.mu * e;
    if (j < m.n_viscous()) {
      iso -= c.bulk_eigenvalue() * mem[j].phiV;
      s -= 2.0 * c.mu * mem[j].phiD;
    }
    for (int p = 0; p < d; ++p) s(p, p) += iso;
  }
  return s;
}

std::vector<SymTensor> stress_internal(const Material& m, const std::vector<SymTensor>& e,
                                       const std::vector<MemoryState>& mem) {
  if (e.size() != mem.size()) throw std::invalid_argument("strain and memory fields have different sizes");
  std::vector<SymTensor> out(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) out[i] = stress_internal(m, e[i], mem[i]);
  return out;
}

SymTensor stress_convolution(const RelaxationKernel& k, const std::vector<SymTensor>& history, double dt, double t) {
  if (history.empty()) throw std::invalid_argument("empty strain history");
  if (!(dt > 0.0)) throw std::invalid_argument("history spacing must be positive");
  const double t_end = dt * static_cast<double>(history.size() - 1);
  if (t < 0.0 || t > t_end * (1.0 + 1e-12)) throw std::out_of_range("stress_convolution: t beyond strain history");

  const int n_full = std::min(static_cast<int>(std::floor(t / dt * (1.0 + 1e-14))), static_cast<int>(history.size()) - 1);
  const double tail = t - n_full * dt;
  auto strain_at = [&](double s) {
    const int i = std::min(static_cast<int>(s / dt), static_cast<int>(history.size()) - 2);
    if (i < 0) return history.front();
    const double w = s / dt - i;
    return (1.0 - w) * history[i] + w * history[i + 1];
  };
  const SymTensor e_t = (tail > 0.0 && n_full + 1 < static_cast<int>(history.size())) ? strain_at(t) : history[n_full];

  auto integrand = [&](double s, const SymTensor& e) {
    const VolDev vd = vol_dev_split(e);
    return k.dg_vol(t - s) * vd.vol + k.dg_dev(t - s) * vd.dev;
  };

  SymTensor acc = k.apply(0.0, e_t);
  for (int i = 0; i < n_full; ++i) {
    acc += (0.5 * dt) * (integrand(i * dt, history[i]) + integrand((i + 1) * dt, history[i + 1]));
  }
  if (tail > 0.0) acc += (0.5 * tail) * (integrand(n_full * dt, history[n_full]) + integrand(t, e_t));
  return acc;
}

EtdWeights etd_weights(double rate, double dt) {
  const double x = rate * dt;
  const double q = -std::expm1(-x);
  // 1 - q/x loses digits for small x; use its Taylor series there.
  const double c = x < 1e-3 ? x * (0.5 - x * (1.0 / 6.0 - x / 24.0)) : 1.0 - q / x;
  return {1.0 - q, q, c};
}

UnitMemory memory_update(const MaxwellUnit& unit, const UnitMemory& mem, const SymTensor& e_old,
                         const SymTensor& e_new, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("memory_update: dt must be positive");
  if (!unit.viscous()) throw std::invalid_argument("memory_update: unit has no dashpot");
  const double eta = *unit.viscosity;
  const int d = e_old.dim();
  const VolDev v0 = vol_dev_split(e_old), v1 = vol_dev_split(e_new);

  const EtdWeights wv = etd_weights(unit.moduli.bulk_eigenvalue() / eta, dt);
  const double f0 = e_old.trace() / d, f1 = e_new.trace() / d;
  UnitMemory out(d);
  out.phiV = wv.a * mem.phiV + wv.b * f0 + wv.c * (f1 - f0);

  const EtdWeights wd = etd_weights(unit.moduli.shear_eigenvalue() / eta, dt);
  out.phiD = wd.a * mem.phiD + wd.b * v0.dev + wd.c * (v1.dev - v0.dev);
  return out;
}

}  // namespace visco
