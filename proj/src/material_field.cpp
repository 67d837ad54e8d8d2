#include "visco/material_field.hpp"

#include <algorithm>
#include <cmath>

namespace visco {

namespace {

double smoothstep5(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

}  // namespace

double Region::signed_distance(const std::array<double, 3>& x, int dim) const {
  if (shape == Shape::Ball) {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    return std::sqrt(r2) - radius;
  }
  double d = -1e300;
  for (int a = 0; a < dim; ++a) d = std::max({d, lo[a] - x[a], x[a] - hi[a]});
  return d;
}

double Region::weight(const std::array<double, 3>& x, int dim) const {
  const double d = signed_distance(x, dim);
  if (blend <= 0.0) return d <= 0.0 ? 1.0 : 0.0;
  return 1.0 - smoothstep5(d / blend + 0.5);
}

MaterialField::MaterialField(const Grid& g, const Material& base, const std::vector<Region>& regions)
    : g_(g), base_(base) {
  g_.validate();
  if (base.dim() != g.dim) throw std::invalid_argument("material dimension does not match the grid");
  const std::size_t n = g_.size();
  const int nu = base.n_units();
  lambda_.assign(nu, Field(n));
  mu_.assign(nu, Field(n));
  eta_.assign(base.n_viscous(), Field(n));
  rho_.assign(n, base.rho());
  for (std::size_t i = 0; i < n; ++i) {
    double sl = 1.0, sm = 1.0, se = 1.0, sr = 1.0;
    const auto x = g_.coords(i);
    for (const auto& r : regions) {
      const double w = r.weight(x, g.dim);
      if (w == 0.0) continue;
      sl *= 1.0 + (r.lambda_scale - 1.0) * w;
      sm *= 1.0 + (r.mu_scale - 1.0) * w;
      se *= 1.0 + (r.eta_scale - 1.0) * w;
      sr *= 1.0 + (r.rho_scale - 1.0) * w;
    }
    for (int j = 0; j < nu; ++j) {
      const auto& u = base.units()[j];
      lambda_[j][i] = u.moduli.lambda * sl;
      mu_[j][i] = u.moduli.mu * sm;
      if (j < base.n_viscous()) eta_[j][i] = *u.viscosity * se;
    }
    rho_[i] = base.rho() * sr;
  }
  // Every node must still describe a valid material.
  for (std::size_t i = 0; i < n; ++i) (void)at(i);
}

Material MaterialField::at(std::size_t idx) const {
  std::vector<MaxwellUnit> units;
  for (int j = 0; j < n_units(); ++j) {
    MaxwellUnit u{{lambda_[j][idx], mu_[j][idx], g_.dim}, std::nullopt};
    if (j < n_viscous()) u.viscosity = eta_[j][idx];
    units.push_back(u);
  }
  return Material(units, rho_[idx]);
}

Field MaterialField::alpha_field() const {
  Field a(g_.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < n_units(); ++j) s += operator_norm({lambda_[j][i], mu_[j][i], g_.dim});
    a[i] = std::sqrt(s / rho_[i]);
  }
  return a;
}

double MaterialField::alpha_max() const {
  const Field a = alpha_field();
  return *std::max_element(a.begin(), a.end());
}

Field MaterialField::shear_speed() const {
  Field c(g_.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    double s = 0.0;
    for (int j = 0; j < n_units(); ++j) s += mu_[j][i];
    c[i] = std::sqrt(s / rho_[i]);
  }
  return c;
}

double MaterialField::smoothness_lint() const {
  std::vector<const Field*> params{&rho_};
  for (const auto& f : lambda_) params.push_back(&f);
  for (const auto& f : mu_) params.push_back(&f);
  for (const auto& f : eta_) params.push_back(&f);
  double worst = 0.0;
  for (const Field* f : params) {
    double scale = 0.0;
    for (double x : *f) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) continue;
    for (int a = 0; a < g_.dim; ++a) {
      const std::size_t st = g_.stride(a);
      for (std::size_t i = 0; i < f->size(); ++i) {
        if (g_.ijk(i)[a] == g_.cells[a]) continue;
        worst = std::max(worst, std::abs((*f)[i + st] - (*f)[i]) / scale);
      }
    }
  }
  return worst;
}

}  // namespace visco
