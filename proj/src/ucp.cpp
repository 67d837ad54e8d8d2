#include "visco/ucp.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace visco {

GridAugmentedField assemble_U(const GridOps& ops, const MultiField& u) {
  if (ops.grid().dim != 3) throw std::invalid_argument("the augmented field needs d = 3");
  GridAugmentedField out;
  out.u = u;
  ops.div(u, out.p);
  ops.curl(u, out.w);
  return out;
}

namespace {

Poly shifted(int axis, const std::vector<mpq_class>& x0) {
  return Poly::variable(3, axis) - Poly::constant(3, x0[axis]);
}

// Homogeneous harmonic cubics in (X, Y, Z); each has a monomial no other one uses.
std::vector<Poly> harmonic_cubics(const Poly& X, const Poly& Y, const Poly& Z) {
  const mpq_class three(3);
  return {X * Y * Z,
          X * X * X - three * (X * Y * Y),
          Y * Y * Y - three * (X * X * Y),
          X * X * X - three * (X * Z * Z),
          Z * Z * Z - three * (X * X * Z),
          Y * Y * Y - three * (Y * Z * Z),
          Z * Z * Z - three * (Y * Y * Z)};
}

}  // namespace

std::vector<mpq_class> principal_remainder_probes(const Poly& a, const Poly& lambda, const Poly& mu,
                                                  const std::vector<mpq_class>& x0, const Poly* d_pressure) {
  if (x0.size() != 3) throw std::invalid_argument("x0 must have three coordinates");
  const Poly X = shifted(0, x0), Y = shifted(1, x0), Z = shifted(2, x0);
  const std::array<Poly, 3> v{X, Y, Z};
  std::vector<PolyVec> probes;
  for (int i = 0; i < 3; ++i)
    for (int p = 3; p >= 0; --p)
      for (int q = 3 - p; q >= 0; --q) {
        Poly m = Poly::constant(3, 1);
        for (int k = 0; k < p; ++k) m *= v[0];
        for (int k = 0; k < q; ++k) m *= v[1];
        for (int k = 0; k < 3 - p - q; ++k) m *= v[2];
        PolyVec du(3, Poly(3));
        du[i] = m;
        probes.push_back(du);
      }
  for (const Poly& f : harmonic_cubics(X, Y, Z)) probes.push_back(grad(f));

  std::vector<mpq_class> out;
  for (const PolyVec& du : probes)
    for (const Poly& r : principal_remainder(du, a, lambda, mu, d_pressure)) out.push_back(r.evaluate(x0));
  return out;
}

double float_identity_residual(const PolyVec& u, const Poly& lambda, const Poly& mu,
                               const std::vector<std::array<double, 3>>& points) {
  using V = BasicPolyVec<double>;
  const V uf = to_float(u);
  const FPoly lf = to_float(lambda), mf = to_float(mu);
  const auto res = check_stress_identities(uf, lf, mf);

  // Left-hand sides in the order the residuals are listed.
  const V ds = tensor_div(ucp_detail::isotropic_stress(uf, lf, mf));
  std::vector<FPoly> lhs(ds.begin(), ds.end());
  const V lap = laplacian(uf);
  lhs.insert(lhs.end(), lap.begin(), lap.end());
  lhs.push_back(div(ds));
  const V cds = curl(ds);
  lhs.insert(lhs.end(), cds.begin(), cds.end());

  double worst = 0.0;
  for (std::size_t k = 0; k < lhs.size(); ++k) {
    double scale = 0.0, err = 0.0;
    for (const auto& x : points) {
      const std::vector<double> pt{x[0], x[1], x[2]};
      scale = std::max(scale, std::abs(lhs[k].evaluate(pt)));
      err = std::max(err, std::abs(res.terms[k].second.evaluate(pt)));
    }
    if (err > 0.0) worst = std::max(worst, scale > 0.0 ? err / scale : INFINITY);
  }
  return worst;
}

double log_weight_squared(double r, double beta) {
  const double l = std::log(r);
  return beta * l * l;
}

double carleman_weight(const std::array<double, 3>& x, const std::array<double, 3>& x0, double beta) {
  const double r = std::hypot(x[0] - x0[0], x[1] - x0[1], x[2] - x0[2]);
  if (r == 0.0) throw std::domain_error("the Carleman weight is singular at x0");
  return std::exp(0.5 * log_weight_squared(r, beta));
}

double CarlemanConfig::T0() const {
  return std::min(1.0 / (4.0 * std::numbers::e * b0), std::numbers::ln2 / b1);
}

void CarlemanConfig::validate() const {
  if (!(r0 > 0.0 && r0 < 1.0 / std::numbers::e)) throw std::invalid_argument("r0 must lie in (0, 1/e)");
  if (!(b0 > 0.0) || !(b1 > 0.0)) throw std::invalid_argument("b0 and b1 must be positive");
}

TestFunction::Jet TestFunction::eval(const std::array<double, 3>& x) const {
  Jet z;
  z.value = 1.0;
  for (const Bump& f : factors) {
    std::array<double, 3> d;
    double s2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      d[k] = x[k] - f.center[k];
      s2 += d[k] * d[k];
    }
    const double r2 = f.radius * f.radius;
    const double b = 1.0 - s2 / r2;
    if (b <= 0.0) return Jet{};
    const double b2 = b * b, b3 = b2 * b;
    Jet g;
    g.value = b2 * b2;
    for (int k = 0; k < 3; ++k) g.grad[k] = -8.0 * b3 * d[k] / r2;
    g.laplacian = -24.0 * b3 / r2 + 48.0 * b2 * s2 / (r2 * r2);
    Jet p;
    p.value = z.value * g.value;
    double cross = 0.0;
    for (int k = 0; k < 3; ++k) {
      p.grad[k] = z.value * g.grad[k] + g.value * z.grad[k];
      cross += z.grad[k] * g.grad[k];
    }
    p.laplacian = z.value * g.laplacian + 2.0 * cross + g.value * z.laplacian;
    z = p;
  }
  return z;
}

void TestFunction::check_support(const CarlemanConfig& cfg) const {
  if (factors.empty()) throw std::invalid_argument("test function needs at least one bump");
  for (const Bump& f : factors) {
    if (!(f.radius > 0.0)) throw std::invalid_argument("bump radius must be positive");
    const double d = std::hypot(f.center[0] - cfg.x0[0], f.center[1] - cfg.x0[1], f.center[2] - cfg.x0[2]);
    // Every factor's ball contains the support, so the first suffices; check all for clarity.
    if (d <= f.radius) throw std::invalid_argument("test function support must avoid x0");
    if (d + f.radius >= cfg.r0) throw std::invalid_argument("test function support must lie in B_r0(x0)");
  }
}

namespace {

struct Rule {
  std::vector<double> x, w;  // on [-1, 1]
};

template <unsigned N>
Rule gauss_rule() {
  using G = boost::math::quadrature::gauss<double, N>;
  Rule r;
  const auto& a = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0.0) {
      r.x.push_back(0.0);
      r.w.push_back(w[i]);
      continue;
    }
    r.x.push_back(a[i]);
    r.w.push_back(w[i]);
    r.x.push_back(-a[i]);
    r.w.push_back(w[i]);
  }
  return r;
}

const Rule& radial_rule() {
  static const Rule r = gauss_rule<10>();
  return r;
}
const Rule& polar_rule() {
  static const Rule r = gauss_rule<16>();
  return r;
}

// Integrates h^2 F over the ball of `region`, F returning `n` values. Returns
// the log scale m of the result: out holds the integrals times exp(-m), with m
// the largest log h^2 among nodes where F is nonzero.
double ball_quadrature(const Bump& region, const std::array<double, 3>& x0, double beta, const QuadratureOptions& q,
                       int n, const std::function<void(const std::array<double, 3>&, double*)>& f, double* out) {
  std::array<double, 3> axis;
  const double D = std::hypot(region.center[0] - x0[0], region.center[1] - x0[1], region.center[2] - x0[2]);
  for (int k = 0; k < 3; ++k) axis[k] = (region.center[k] - x0[k]) / D;
  // Orthonormal frame around the axis.
  std::array<double, 3> e1 = std::abs(axis[0]) < 0.9 ? std::array<double, 3>{1, 0, 0} : std::array<double, 3>{0, 1, 0};
  const double proj = e1[0] * axis[0] + e1[1] * axis[1] + e1[2] * axis[2];
  for (int k = 0; k < 3; ++k) e1[k] -= proj * axis[k];
  const double n1 = std::hypot(e1[0], e1[1], e1[2]);
  for (double& c : e1) c /= n1;
  const std::array<double, 3> e2{axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2],
                                 axis[0] * e1[1] - axis[1] * e1[0]};

  const double rho = region.radius;
  const double r_lo = D - rho, r_hi = D + rho, len = r_hi - r_lo;
  // Decay length of h^2 at its peak r_lo.
  const double slope = 2.0 * beta * std::abs(std::log(r_lo)) / r_lo;
  const double ell = slope > 0.0 ? 1.0 / slope : len;
  std::vector<double> edges{r_lo};
  {
    std::vector<double> offsets;
    double o = len;
    while (o > 0.25 * ell && offsets.size() < 200) {
      offsets.push_back(o);
      o *= q.grading;
    }
    offsets.push_back(o);
    for (auto it = offsets.rbegin(); it != offsets.rend(); ++it) edges.push_back(r_lo + *it);
  }

  const Rule& rr = radial_rule();
  const Rule& pr = polar_rule();
  const int na = q.azimuth_nodes;
  std::vector<double> cphi(na), sphi(na);
  for (int k = 0; k < na; ++k) {
    cphi[k] = std::cos(2.0 * std::numbers::pi * k / na);
    sphi[k] = std::sin(2.0 * std::numbers::pi * k / na);
  }
  const double wphi = 2.0 * std::numbers::pi / na;

  // Angular integrals per radial node first, so the scale can be fixed afterwards.
  std::vector<double> lws, sums;
  std::vector<double> vals(n), ang(n);
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p], b = edges[p + 1];
    for (std::size_t i = 0; i < rr.x.size(); ++i) {
      const double r = 0.5 * (a + b) + 0.5 * (b - a) * rr.x[i];
      const double wr = 0.5 * (b - a) * rr.w[i];
      const double umin = std::clamp((r * r + D * D - rho * rho) / (2.0 * r * D), -1.0, 1.0);
      std::fill(ang.begin(), ang.end(), 0.0);
      bool any = false;
      for (std::size_t j = 0; j < pr.x.size(); ++j) {
        const double u = 0.5 * (umin + 1.0) + 0.5 * (1.0 - umin) * pr.x[j];
        const double wu = 0.5 * (1.0 - umin) * pr.w[j];
        const double st = std::sqrt(std::max(0.0, 1.0 - u * u));
        for (int k = 0; k < na; ++k) {
          std::array<double, 3> x;
          for (int c = 0; c < 3; ++c)
            x[c] = x0[c] + r * (u * axis[c] + st * (cphi[k] * e1[c] + sphi[k] * e2[c]));
          f(x, vals.data());
          for (int m = 0; m < n; ++m) {
            ang[m] += wu * wphi * vals[m];
            any |= vals[m] != 0.0;
          }
        }
      }
      if (!any) continue;
      lws.push_back(log_weight_squared(r, beta));
      for (int m = 0; m < n; ++m) sums.push_back(wr * r * r * ang[m]);
    }
  }
  std::fill(out, out + n, 0.0);
  if (lws.empty()) return 0.0;
  const double scale = *std::max_element(lws.begin(), lws.end());
  for (std::size_t i = 0; i < lws.size(); ++i) {
    const double e = lws[i] - scale;
    if (e < -745.0) continue;
    const double w = std::exp(e);
    for (int m = 0; m < n; ++m) out[m] += w * sums[i * n + m];
  }
  return scale;
}

// The factor whose ball reaches least close to x0; its ball contains the support.
const Bump& region_of(const TestFunction& z, const std::array<double, 3>& x0) {
  const Bump* best = &z.factors.front();
  double far = -INFINITY;
  for (const Bump& b : z.factors) {
    const double d = std::hypot(b.center[0] - x0[0], b.center[1] - x0[1], b.center[2] - x0[2]) - b.radius;
    if (d > far) far = d, best = &b;
  }
  return *best;
}

}  // namespace

WeightedIntegrals weighted_integrals(const TestFunction& z, const CarlemanConfig& cfg, double beta,
                                     const QuadratureOptions& q) {
  cfg.validate();
  z.check_support(cfg);
  WeightedIntegrals out;
  double acc[2];
  out.log_scale = ball_quadrature(region_of(z, cfg.x0), cfg.x0, beta, q, 2,
                  [&](const std::array<double, 3>& x, double* v) {
                    const auto j = z.eval(x);
                    v[0] = j.grad[0] * j.grad[0] + j.grad[1] * j.grad[1] + j.grad[2] * j.grad[2] + j.value * j.value;
                    v[1] = j.laplacian * j.laplacian;
                  },
                  acc);
  out.grad_and_value = acc[0];
  out.laplacian = acc[1];
  if (!(out.laplacian > 0.0) || !std::isnormal(out.laplacian))
    throw std::range_error("weighted Laplacian integral underflowed");
  return out;
}

double carleman_ratio(const TestFunction& z, const CarlemanConfig& cfg, double beta, const QuadratureOptions& q) {
  const WeightedIntegrals w = weighted_integrals(z, cfg, beta, q);
  return beta * w.grad_and_value / w.laplacian;
}

WeightedGram weighted_laplacian_gram(const std::vector<TestFunction>& zs, const CarlemanConfig& cfg, double beta,
                                     const QuadratureOptions& q) {
  cfg.validate();
  WeightedGram out;
  for (const auto& z : zs) z.check_support(cfg);
  const std::size_t n = zs.size();
  out.g.assign(n, std::vector<double>(n, 0.0));
  // Row k is integrated over the support of z_k, which contains every product z_k z_l.
  std::vector<double> scales(n);
  for (std::size_t k = 0; k < n; ++k)
    scales[k] = ball_quadrature(region_of(zs[k], cfg.x0), cfg.x0, beta, q, static_cast<int>(n),
                                [&](const std::array<double, 3>& x, double* v) {
                                  const double lk = zs[k].eval(x).laplacian;
                                  for (std::size_t l = 0; l < n; ++l)
                                    v[l] = lk == 0.0 ? 0.0 : lk * zs[l].eval(x).laplacian;
                                },
                                out.g[k].data());
  out.log_scale = *std::max_element(scales.begin(), scales.end());
  for (std::size_t k = 0; k < n; ++k)
    for (double& v : out.g[k]) v *= std::exp(scales[k] - out.log_scale);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k + 1; l < n; ++l) out.g[k][l] = out.g[l][k] = 0.5 * (out.g[k][l] + out.g[l][k]);
  return out;
}

std::vector<ProbeRow> probe_ratio(const TestFunction& z, const CarlemanConfig& cfg, const std::vector<double>& betas,
                                  const QuadratureOptions& q) {
  std::vector<ProbeRow> rows;
  double sup = 0.0;
  for (double b : betas) {
    const double r = carleman_ratio(z, cfg, b, q);
    sup = std::max(sup, r);
    rows.push_back({b, r, sup});
  }
  return rows;
}

std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "beta,ratio,empirical_a\n";
  for (const auto& r : rows) os << r.beta << ',' << r.ratio << ',' << r.empirical_a << '\n';
  return os.str();
}

std::vector<double> beta_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw std::invalid_argument("bad beta range");
  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) b[i] = n == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return b;
}

double estimate_beta0(const std::vector<TestFunction>& zs, const CarlemanConfig& cfg, const std::vector<double>& scan,
                      const QuadratureOptions& q) {
  if (scan.size() < 3) throw std::invalid_argument("beta scan needs at least three values");
  std::size_t start = 0;
  for (const auto& z : zs) {
    const auto rows = probe_ratio(z, cfg, scan, q);
    // Last index at which the ratio still rose.
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].ratio > rows[i - 1].ratio) start = std::max(start, i);
  }
  if (start + 2 >= scan.size()) throw std::runtime_error("ratio keeps growing across the beta scan");
  return scan[start];
}

RatioTrend ratio_trend(const std::vector<ProbeRow>& rows) {
  RatioTrend t;
  if (rows.empty()) return t;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rows.size());
  for (const auto& r : rows) {
    const double x = std::log(r.beta), y = std::log(r.ratio);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    t.max = std::max(t.max, r.ratio);
  }
  const double den = n * sxx - sx * sx;
  t.slope = den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
  t.first = rows.front().ratio;
  t.last = rows.back().ratio;
  t.non_growing = t.slope <= 0.05 && t.last <= 1.05 * t.first;
  return t;
}

double Kernel::operator()(double t) const {
  switch (kind) {
    case Kind::Growth: return b0 * std::exp(b1 * t);
    case Kind::NegativeGrowth: return -b0 * std::exp(b1 * t);
    case Kind::Oscillating: return b0 * std::exp(b1 * t) * std::cos(omega * t);
    case Kind::Constant: return b0;
  }
  return 0.0;
}

std::string Kernel::name() const {
  switch (kind) {
    case Kind::Growth: return "growth";
    case Kind::NegativeGrowth: return "negative_growth";
    case Kind::Oscillating: return "oscillating";
    case Kind::Constant: return "constant";
  }
  return "?";
}

MemoryProbe probe_memory(const WeightedGram& gram, const std::vector<std::function<double(double)>>& psi,
                         const Kernel& d, double t, int steps) {
  const std::size_t n = psi.size();
  if (gram.g.size() != n) throw std::invalid_argument("one time profile per Gram row is required");
  if (!(t > 0.0) || steps < 2) throw std::invalid_argument("probe time must be positive");
  if (steps % 2) ++steps;
  const double ds = t / steps;
  std::vector<std::vector<double>> ps(n, std::vector<double>(steps + 1)), gs = ps;
  std::vector<double> kern(steps + 1);
  for (int i = 0; i <= steps; ++i) kern[i] = d(i * ds);
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i <= steps; ++i) ps[k][i] = psi[k](i * ds);
  // g_k(s_i) = int_0^{s_i} d(s_i - tau) psi_k(tau) dtau, trapezoid rule.
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 1; i <= steps; ++i) {
      double acc = 0.5 * (kern[i] * ps[k][0] + kern[0] * ps[k][i]);
      for (int j = 1; j < i; ++j) acc += kern[i - j] * ps[k][j];
      gs[k][i] = acc * ds;
    }
  auto quad = [&](std::size_t i, const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) s += gram.g[k][l] * a[k][i] * b[l][i];
    return s;
  };
  std::vector<std::vector<double>> diff(n, std::vector<double>(steps + 1));
  for (std::size_t k = 0; k < n; ++k)
    for (int i = 0; i <= steps; ++i) diff[k][i] = ps[k][i] - gs[k][i];
  double ia = 0.0, ib = 0.0, ic = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    ia += w * quad(i, ps, ps);
    ib += w * quad(i, gs, gs);
    ic += w * quad(i, diff, diff);
  }
  ia *= ds / 3.0, ib *= ds / 3.0, ic *= ds / 3.0;
  MemoryProbe m;
  m.t = t;
  m.bound_lhs = ib;
  m.bound_rhs = d.b0 * d.b0 * t * t * std::exp(2.0 * d.b1 * t) * ia;
  m.absorb_lhs = 0.5 * ia;
  m.absorb_rhs = ic;
  return m;
}

}  // namespace visco
