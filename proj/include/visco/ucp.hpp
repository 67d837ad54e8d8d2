#pragma once

// The augmented field U = (u, div u, curl u), the stress identities behind the
// diagonal principal part of the reformulated system, the logarithmic
// Carleman weight and numerical probes of the weighted estimates.

#include <array>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "visco/grid.hpp"
#include "visco/poly.hpp"

namespace visco {

template <class T>
struct BasicAugmentedField {
  BasicPolyVec<T> u;
  BasicPoly<T> p;
  BasicPolyVec<T> w;
};
using AugmentedField = BasicAugmentedField<mpq_class>;

/// Throws std::invalid_argument unless u has three components in three variables.
template <class T>
BasicAugmentedField<T> assemble_U(const BasicPolyVec<T>& u) {
  if (u.size() != 3 || u[0].dim() != 3) throw std::invalid_argument("the augmented field needs d = 3");
  return {u, div(u), curl(u)};
}

struct GridAugmentedField {
  MultiField u;
  Field p;
  MultiField w;
};
/// Finite-difference p and w. Throws std::invalid_argument unless the grid is 3D.
GridAugmentedField assemble_U(const GridOps& ops, const MultiField& u);

/// Named residuals (left side minus right side) of a set of identities.
template <class T>
struct IdentityResiduals {
  std::vector<std::pair<std::string, BasicPoly<T>>> terms;

  void add(const std::string& name, const BasicPoly<T>& r) { terms.emplace_back(name, r); }
  void add(const std::string& name, const BasicPolyVec<T>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) add(name + "[" + std::to_string(i) + "]", r[i]);
  }
  bool all_zero() const {
    for (const auto& t : terms)
      if (!t.second.is_zero()) return false;
    return true;
  }
  std::string summary() const {
    std::string s;
    for (const auto& [name, r] : terms) s += name + ": " + (r.is_zero() ? "0" : r.to_string()) + "\n";
    return s;
  }
};

namespace ucp_detail {

template <class T>
BasicPolyMat<T> isotropic_stress(const BasicPolyVec<T>& u, const BasicPoly<T>& lambda, const BasicPoly<T>& mu) {
  BasicPolyMat<T> s = sym_grad(u);
  const BasicPoly<T> lp = lambda * div(u);
  for (auto& row : s)
    for (auto& x : row) x = T(2) * (mu * x);
  for (std::size_t i = 0; i < s.size(); ++i) s[i][i] += lp;
  return s;
}

template <class T>
BasicPolyVec<T> mat_vec(const BasicPolyMat<T>& m, const BasicPolyVec<T>& v) {
  BasicPolyVec<T> r(m.size(), BasicPoly<T>(v[0].dim()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) r[i] += m[i][j] * v[j];
  return r;
}

inline int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

}  // namespace ucp_detail

/// Residuals of
///   div(C e[u])       = mu Lap u + (lambda + mu) grad p + p grad lambda + 2 e[u] grad mu
///   Lap u             = grad p - curl w
///   div div(C e[u])   = (lambda + 2 mu) Lap p + 2 grad mu . (grad p - curl w) + (Lap lambda) p
///                       + 2 grad(lambda + mu) . grad p + sum_ij (d_j u_i + d_i u_j) d_ij mu
///   curl div(C e[u])  = mu Lap w + grad mu x (grad p - curl w) + grad(lambda + mu) x grad p
///                       + grad p x grad lambda + sum_j [d_j mu d_j w + grad d_j mu x (d_j u + grad u_j)]
/// with C e = lambda tr(e) I + 2 mu e, p = div u, w = curl u.
template <class T>
IdentityResiduals<T> check_stress_identities(const BasicPolyVec<T>& u, const BasicPoly<T>& lambda,
                                             const BasicPoly<T>& mu) {
  using P = BasicPoly<T>;
  using V = BasicPolyVec<T>;
  const auto U = assemble_U(u);
  const P& p = U.p;
  const V& w = U.w;
  const V ds = tensor_div(ucp_detail::isotropic_stress(u, lambda, mu));
  const BasicPolyMat<T> e = sym_grad(u);
  const V gl = grad(lambda), gm = grad(mu), gp = grad(p), cw = curl(w);
  const V lap_u = laplacian(u);
  const P lm = lambda + mu;

  IdentityResiduals<T> out;
  out.add("div_stress", ds - (mu * lap_u + lm * gp + p * gl + T(2) * ucp_detail::mat_vec(e, gm)));
  out.add("vector_laplacian", lap_u - (gp - cw));

  P rhs_div = (lambda + T(2) * mu) * laplacian(p) + T(2) * dot(gm, gp - cw) + laplacian(lambda) * p +
              T(2) * dot(grad(lm), gp);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      rhs_div += (differentiate(u[i], j) + differentiate(u[j], i)) * differentiate(gm[i], j);
  out.add("div_div_stress", div(ds) - rhs_div);

  V rhs_curl = mu * laplacian(w) + cross(gm, gp - cw) + cross(grad(lm), gp) + cross(gp, gl);
  for (int j = 0; j < 3; ++j) {
    V duj(3, P(3));
    for (int i = 0; i < 3; ++i) duj[i] = differentiate(u[i], j);
    V wj(3, P(3));
    for (int i = 0; i < 3; ++i) wj[i] = differentiate(w[i], j);
    rhs_curl = rhs_curl + gm[j] * wj + cross(grad(gm[j]), duj + grad(u[j]));
  }
  out.add("curl_div_stress", curl(ds) - rhs_curl);
  return out;
}

/// Residuals of the identities used for a scalar weight a, with M = 2 e[u]:
///   div(a C e[u])  = a div(C e[u]) + (C e[u]) grad a
///   div(M grad a)  = (2 grad p - curl w) . grad a + sum_ij M_ij d_ij a
///   curl(M grad a) = (grad w) grad a + sum eps_kli M_ij d_lj a
template <class T>
IdentityResiduals<T> check_weighted_identities(const BasicPolyVec<T>& u, const BasicPoly<T>& a,
                                               const BasicPoly<T>& lambda, const BasicPoly<T>& mu) {
  using P = BasicPoly<T>;
  using V = BasicPolyVec<T>;
  const auto U = assemble_U(u);
  const BasicPolyMat<T> ce = ucp_detail::isotropic_stress(u, lambda, mu);
  BasicPolyMat<T> ace = ce;
  for (auto& row : ace)
    for (auto& x : row) x = a * x;
  const V ga = grad(a);

  IdentityResiduals<T> out;
  out.add("weighted_div_stress", tensor_div(ace) - (a * tensor_div(ce) + ucp_detail::mat_vec(ce, ga)));

  BasicPolyMat<T> m = sym_grad(u);
  for (auto& row : m)
    for (auto& x : row) x = T(2) * x;
  const V mga = ucp_detail::mat_vec(m, ga);

  P rhs_div = dot(T(2) * grad(U.p) - curl(U.w), ga);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rhs_div += m[i][j] * differentiate(ga[i], j);
  out.add("div_strain_grad_a", div(mga) - rhs_div);

  V rhs_curl(3, P(3));
  for (int k = 0; k < 3; ++k) {
    for (int j = 0; j < 3; ++j) rhs_curl[k] += differentiate(U.w[k], j) * ga[j];
    for (int l = 0; l < 3; ++l)
      for (int i = 0; i < 3; ++i) {
        const int eps = ucp_detail::levi_civita(k, l, i);
        if (eps == 0) continue;
        for (int j = 0; j < 3; ++j) rhs_curl[k] += T(eps) * (m[i][j] * differentiate(ga[l], j));
      }
  }
  out.add("curl_strain_grad_a", curl(mga) - rhs_curl);
  return out;
}

/// Seven components of diag(I, div, curl) div(a C e[u]) - a D Lap U with
/// D = diag(mu, mu, mu, lambda + 2 mu, mu, mu, mu). `d_pressure` replaces the
/// fourth diagonal entry when given (for negative controls).
template <class T>
BasicPolyVec<T> principal_remainder(const BasicPolyVec<T>& u, const BasicPoly<T>& a, const BasicPoly<T>& lambda,
                                    const BasicPoly<T>& mu, const BasicPoly<T>* d_pressure = nullptr) {
  using P = BasicPoly<T>;
  using V = BasicPolyVec<T>;
  const auto U = assemble_U(u);
  BasicPolyMat<T> ace = ucp_detail::isotropic_stress(u, lambda, mu);
  for (auto& row : ace)
    for (auto& x : row) x = a * x;
  const V f = tensor_div(ace);
  const P dp = d_pressure ? *d_pressure : lambda + T(2) * mu;
  V r = f - (a * mu) * laplacian(u);
  r.push_back(div(f) - (a * dp) * laplacian(U.p));
  const V c = curl(f) - (a * mu) * laplacian(U.w);
  r.insert(r.end(), c.begin(), c.end());
  return r;
}

/// Values at x0 of principal_remainder applied to the 30 homogeneous cubic
/// displacements (x - x0)^k e_i, |k| = 3, and the 7 gradients of homogeneous
/// harmonic cubics about x0. All vanish exactly iff the remainder is of first
/// order in U at x0.
std::vector<mpq_class> principal_remainder_probes(const Poly& a, const Poly& lambda, const Poly& mu,
                                                  const std::vector<mpq_class>& x0,
                                                  const Poly* d_pressure = nullptr);

/// Largest relative mismatch between the two sides of every stress identity,
/// evaluated in double precision at the given points.
double float_identity_residual(const PolyVec& u, const Poly& lambda, const Poly& mu,
                               const std::vector<std::array<double, 3>>& points);

// ---------------------------------------------------------------------------
// Carleman weight and probes

/// h = exp(beta/2 (log|x - x0|)^2). Throws std::domain_error at x = x0.
double carleman_weight(const std::array<double, 3>& x, const std::array<double, 3>& x0, double beta);
/// log h^2 = beta (log|x - x0|)^2.
double log_weight_squared(double r, double beta);

struct CarlemanConfig {
  std::array<double, 3> x0{0.0, 0.0, 0.0};
  double r0 = 0.3;  ///< test functions live in B_r0(x0) minus x0; r0 < 1/e
  double b0 = 1.0;  ///< kernel bound |d(t)| <= b0 exp(b1 t)
  double b1 = 1.0;
  /// min(1 / (4 e b0), ln 2 / b1).
  double T0() const;
  /// Throws std::invalid_argument unless 0 < r0 < 1/e and b0, b1 > 0.
  void validate() const;
  friend bool operator==(const CarlemanConfig&, const CarlemanConfig&) = default;
};

/// (1 - |x - c|^2 / rho^2)^4 inside B_rho(c).
struct Bump {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double radius = 0.1;
  friend bool operator==(const Bump&, const Bump&) = default;
};

/// Product of bumps; the support is the intersection of their balls.
struct TestFunction {
  std::vector<Bump> factors;

  struct Jet {
    double value = 0.0;
    std::array<double, 3> grad{0.0, 0.0, 0.0};
    double laplacian = 0.0;
  };
  Jet eval(const std::array<double, 3>& x) const;
  /// Throws std::invalid_argument unless the support lies in B_r0(x0) and avoids x0.
  void check_support(const CarlemanConfig& cfg) const;
  friend bool operator==(const TestFunction&, const TestFunction&) = default;
};

/// Spherical coordinates about x0 aligned with the first bump: 10-point
/// Gauss-Legendre panels in r, graded towards the weight peak, 16 points in
/// cos(theta) over the cap and a periodic trapezoid rule in phi.
struct QuadratureOptions {
  int azimuth_nodes = 32;
  double grading = 0.5;  ///< panel shrink factor towards the weight peak
  friend bool operator==(const QuadratureOptions&, const QuadratureOptions&) = default;
};

/// Weighted integrals against h^2 in a common scale: the true value is value * exp(log_scale).
struct WeightedIntegrals {
  double log_scale = 0.0;
  double grad_and_value = 0.0;  ///< integral of h^2 (|grad z|^2 + z^2)
  double laplacian = 0.0;       ///< integral of h^2 |Lap z|^2
};

/// Throws std::range_error when the Laplacian integral underflows.
WeightedIntegrals weighted_integrals(const TestFunction& z, const CarlemanConfig& cfg, double beta,
                                     const QuadratureOptions& q = {});

/// beta * integral h^2 (|grad z|^2 + z^2) / integral h^2 |Lap z|^2.
double carleman_ratio(const TestFunction& z, const CarlemanConfig& cfg, double beta,
                      const QuadratureOptions& q = {});

/// G_kl = integral h^2 Lap z_k Lap z_l, scaled by exp(-log_scale).
struct WeightedGram {
  double log_scale = 0.0;
  std::vector<std::vector<double>> g;
};
WeightedGram weighted_laplacian_gram(const std::vector<TestFunction>& zs, const CarlemanConfig& cfg, double beta,
                                     const QuadratureOptions& q = {});

struct ProbeRow {
  double beta;
  double ratio;
  double empirical_a;  ///< largest ratio seen up to this beta
};
std::vector<ProbeRow> probe_ratio(const TestFunction& z, const CarlemanConfig& cfg, const std::vector<double>& betas,
                                  const QuadratureOptions& q = {});
/// "beta,ratio,empirical_a" rows.
std::string probe_csv(const std::vector<ProbeRow>& rows);

/// Log-spaced betas on [lo, hi].
std::vector<double> beta_grid(double lo, double hi, int n);

/// Smallest scan value after which every test function's ratio is
/// nonincreasing along the scan. Throws std::runtime_error if there is none
/// before the last two scan points.
double estimate_beta0(const std::vector<TestFunction>& zs, const CarlemanConfig& cfg, const std::vector<double>& scan,
                      const QuadratureOptions& q = {});

struct RatioTrend {
  double slope = 0.0;  ///< least-squares slope of log ratio against log beta
  double first = 0.0, last = 0.0, max = 0.0;
  /// slope <= 0.05 and last <= 1.05 first
  bool non_growing = false;
};
RatioTrend ratio_trend(const std::vector<ProbeRow>& rows);

/// Memory kernels bounded by |d(t)| <= b0 exp(b1 t).
struct Kernel {
  enum class Kind { Growth, NegativeGrowth, Oscillating, Constant };
  Kind kind = Kind::Growth;
  double b0 = 1.0, b1 = 1.0;
  double omega = 20.0;
  double operator()(double t) const;
  std::string name() const;
};

/// Both sides of the memory estimates for z(x, s) = sum_k z_k(x) psi_k(s) with
/// kernel d(s - tau):
///   bound:      int_0^t int h^2 |int_0^s d Lap z dtau|^2  <=  b0^2 t^2 e^{2 b1 t} int_0^t int h^2 |Lap z|^2
///   absorption: 1/2 int_0^t int h^2 |Lap z|^2             <=  int_0^t int h^2 |Lap z - int_0^s d Lap z dtau|^2
/// Spatial integrals come from the Gram matrix, so all four numbers share its scale.
struct MemoryProbe {
  double t = 0.0;
  double bound_lhs = 0.0, bound_rhs = 0.0;
  double absorb_lhs = 0.0, absorb_rhs = 0.0;
  double bound_slack() const { return bound_rhs / bound_lhs; }
  double absorb_slack() const { return absorb_rhs / absorb_lhs; }
  bool bound_holds() const { return bound_lhs <= bound_rhs; }
  bool absorb_holds() const { return absorb_lhs <= absorb_rhs; }
};
MemoryProbe probe_memory(const WeightedGram& gram, const std::vector<std::function<double(double)>>& psi,
                         const Kernel& d, double t, int steps = 400);

}  // namespace visco
