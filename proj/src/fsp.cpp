#include "visco/fsp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace visco {

double alpha(const Material& m) { return std::sqrt(m.norm_sum() / m.rho()); }

double alpha(const MaterialField& m, const std::array<double, 3>& center, double radius) {
  const Grid& g = m.grid();
  const Field a = m.alpha_field();
  double best = -1.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.coords(i);
    double r2 = 0.0;
    for (int k = 0; k < g.dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
    if (r2 <= radius * radius) best = std::max(best, a[i]);
  }
  if (best < 0.0) throw std::invalid_argument("alpha: no grid node lies in the region");
  return best;
}

bool Cone::contains(const std::array<double, 3>& x, int dim, double t) const {
  const double r = radius_at(t);
  if (r <= 0.0) return false;
  double r2 = 0.0;
  for (int k = 0; k < dim; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
  return r2 <= r * r;
}

void Cone::validate(const Grid& g) const {
  if (!(radius > 0.0)) throw std::invalid_argument("cone radius must be positive");
  if (!(speed > 0.0)) throw std::invalid_argument("cone speed must be positive");
  for (int a = 0; a < g.dim; ++a) {
    const double lo = g.origin[a], hi = g.origin[a] + g.extent(a);
    if (center[a] - radius < lo || center[a] + radius > hi)
      throw std::invalid_argument("cone ball must lie inside the grid");
  }
}

double cone_energy(const LevelView& lv, const Cone& cone) {
  const Solver& s = *lv.solver;
  const Grid& g = s.grid();
  if (cone.radius_at(lv.t) <= 0.0) return 0.0;
  const double w = std::pow(g.h, g.dim);
  double e = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (cone.contains(g.coords(i), g.dim, lv.t)) e += s.kinetic_density(i) + s.potential_density(i);
  return 0.5 * w * e;
}

std::string FspReport::to_text() const {
  std::ostringstream os;
  os.precision(9);
  os << "cone_center: " << cone.center[0] << ' ' << cone.center[1] << ' ' << cone.center[2] << '\n'
     << "cone_radius: " << cone.radius << '\n'
     << "cone_speed: " << cone.speed << '\n'
     << "monitored_until: " << t_end << '\n'
     << "samples: " << samples << '\n'
     << "max_cone_energy: " << max_cone_energy << '\n'
     << "max_cone_ratio: " << max_cone_ratio << '\n'
     << "tol_rel: " << tol.rel << '\n'
     << "tol_abs: " << tol.abs << '\n'
     << "max_interior_u: " << max_interior_u << '\n'
     << "max_exterior_u: " << max_exterior_u << '\n'
     << "amplitude_ratio: " << amplitude_ratio << '\n'
     << "tol_field: " << tol.field << '\n'
     << "energy_check: " << (energy_ok ? "pass" : "fail") << '\n'
     << "field_check: " << (field_ok ? "pass" : "fail") << '\n'
     << "result: " << (pass() ? "pass" : "fail") << '\n';
  return os.str();
}

FspMonitor::FspMonitor(const Grid& g, const Cone& cone, const FspTolerances& tol) : g_(g) {
  cone.validate(g);
  r_.cone = cone;
  r_.tol = tol;
}

double FspMonitor::observe(const LevelView& lv) {
  const Cone& c = r_.cone;
  if (lv.t >= c.end_time()) return 0.0;
  const Solver& s = *lv.solver;
  const int dim = g_.dim;
  const auto& u = s.u();
  double in_max = 0.0, out_max = 0.0;
  for (std::size_t i = 0; i < g_.size(); ++i) {
    double m2 = 0.0;
    for (int a = 0; a < dim; ++a) m2 += u[a][i] * u[a][i];
    if (c.contains(g_.coords(i), dim, lv.t)) {
      in_max = std::max(in_max, m2);
      if (lv.n == 0) {
        double v2 = 0.0;
        for (int a = 0; a < dim; ++a) v2 += s.v_mid()[a][i] * s.v_mid()[a][i];
        if (m2 != 0.0 || v2 != 0.0) throw std::invalid_argument("initial data do not vanish in the cone ball");
      }
    } else {
      out_max = std::max(out_max, m2);
    }
  }
  const double e = cone_energy(lv, c);
  const double total = s.energy();
  r_.samples += 1;
  r_.t_end = lv.t;
  r_.max_cone_energy = std::max(r_.max_cone_energy, e);
  if (total > 0.0) r_.max_cone_ratio = std::max(r_.max_cone_ratio, e / total);
  if (e > r_.tol.abs + r_.tol.rel * total) r_.energy_ok = false;
  r_.max_interior_u = std::max(r_.max_interior_u, std::sqrt(in_max));
  r_.max_exterior_u = std::max(r_.max_exterior_u, std::sqrt(out_max));
  return e;
}

RunHooks FspMonitor::hooks(bool keep_snapshots) {
  RunHooks h;
  h.cone_energy = [this](const LevelView& lv) { return observe(lv); };
  h.keep_snapshots = keep_snapshots;
  return h;
}

FspReport FspMonitor::report() const {
  FspReport r = r_;
  if (r.max_exterior_u > 0.0)
    r.amplitude_ratio = r.max_interior_u / r.max_exterior_u;
  else
    r.amplitude_ratio = r.max_interior_u > 0.0 ? INFINITY : 0.0;
  r.field_ok = r.amplitude_ratio <= r.tol.field;
  return r;
}

FspReport verify_fsp(const RunSpec& spec, const Cone& cone, const FspTolerances& tol, RunResult* result) {
  FspMonitor mon(spec.grid, cone, tol);
  RunResult res = run(spec, mon.hooks(result != nullptr));
  if (result) *result = std::move(res);
  return mon.report();
}

RefinementStudy fsp_refinement(const RunSpec& spec, const Cone& cone, const std::vector<int>& cells,
                               const FspTolerances& tol) {
  RefinementStudy out;
  const double extent = spec.grid.extent(0);
  for (int c : cells) {
    RunSpec s = spec;
    for (int a = 0; a < s.grid.dim; ++a) {
      const double ratio = static_cast<double>(spec.grid.cells[a]) / spec.grid.cells[0];
      s.grid.cells[a] = static_cast<int>(std::lround(c * ratio));
    }
    s.grid.h = extent / c;
    s.snapshots = {};
    s.snapshots.include_final = false;
    out.cells.push_back(c);
    out.leakage.push_back(verify_fsp(s, cone, tol).amplitude_ratio);
  }
  for (std::size_t k = 0; k + 1 < out.leakage.size(); ++k)
    out.orders.push_back(std::log(out.leakage[k] / out.leakage[k + 1]) /
                         std::log(static_cast<double>(out.cells[k + 1]) / out.cells[k]));
  return out;
}

}  // namespace visco
