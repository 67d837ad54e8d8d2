#include "visco/solver.hpp"

#include <cmath>
#include <limits>

#include "visco/tensor.hpp"

namespace visco {

void BoundarySpec::validate(int dim, const SourceSpec& source) const {
  if (!source.enabled) return;
  if (source.face < 0 || source.face >= 2 * dim) throw std::invalid_argument("source.face is not a face of the grid");
  if (faces[source.face] != BoundaryKind::Dirichlet)
    throw std::invalid_argument("source.face must be labelled dirichlet");
  bool any_free = false;
  for (int f = 0; f < 2 * dim; ++f) any_free |= faces[f] == BoundaryKind::TractionFree;
  if (!any_free) throw std::invalid_argument("a driven run needs at least one traction_free face");
}

double stable_dt(double alpha_max, const Grid& g, double cfl) {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
  if (!(alpha_max > 0.0)) throw std::invalid_argument("alpha must be positive");
  return cfl * g.h / (std::sqrt(static_cast<double>(g.dim)) * alpha_max);
}

double stable_dt(const MaterialField& m, double cfl) { return stable_dt(m.alpha_max(), m.grid(), cfl); }

namespace {

EtdWeights trapezoid_weights(double rate, double dt) {
  const double x = 0.5 * rate * dt;
  const double c = x / (1.0 + x);
  return {(1.0 - x) / (1.0 + x), 2.0 * c, c};
}

bool is_diag(int dim, int c) {
  for (int p = 0; p < dim; ++p)
    if (SymTensor::packed_index(dim, p, p) == c) return true;
  return false;
}

}  // namespace

Solver::Solver(const MaterialField& m, const BoundarySpec& b, DirichletData g, const SolverOptions& opts, double dt)
    : mf_(m), bc_(b), g_(std::move(g)), opts_(opts), dt_(dt), ops_(m.grid(), opts.order), dim_(m.grid().dim) {
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  const Grid& gr = grid();
  const std::size_t n = gr.size();
  const int ns = sym_size(dim_);
  update_memory_ = mf_.n_viscous() > 0 && !opts_.frozen_dashpots;

  for (int f = 0; f < 2 * dim_; ++f) weak_faces_[f] = bc_.faces[f] == BoundaryKind::TractionFree;
  is_dirichlet_.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ix = gr.ijk(i);
    unsigned mask = 0;
    bool dir = false;
    for (int a = 0; a < dim_; ++a) {
      if (ix[a] == 0) mask |= 1u << (2 * a);
      if (ix[a] == gr.cells[a]) mask |= 1u << (2 * a + 1);
    }
    for (int f = 0; f < 2 * dim_; ++f)
      if ((mask & (1u << f)) && bc_.faces[f] == BoundaryKind::Dirichlet) dir = true;
    if (dir) {
      is_dirichlet_[i] = 1;
      dirichlet_nodes_.push_back(i);
      dirichlet_faces_.push_back(mask);
    }
  }
  g_now_.assign(dirichlet_nodes_.size() * dim_, 0.0);
  g_next_ = g_now_;

  u_ = make_field(gr, dim_);
  v_old_ = v_new_ = v_mid_ = div_ = u_;
  e_ = e_next_ = s_ = make_field(gr, ns);
  phiV_.assign(mf_.n_viscous(), Field(n, 0.0));
  phiD_.assign(mf_.n_viscous(), make_field(gr, ns));

  for (int j = 0; j < mf_.n_viscous(); ++j) {
    std::array<Field, 3> wv{Field(n), Field(n), Field(n)}, wd = wv;
    for (std::size_t i = 0; i < n; ++i) {
      const double eta = mf_.eta(j)[i], lam = mf_.lambda(j)[i], mu = mf_.mu(j)[i];
      const double rv = (dim_ * lam + 2.0 * mu) / eta, rd = 2.0 * mu / eta;
      const EtdWeights a = opts_.memory == MemoryScheme::Exponential ? etd_weights(rv, dt_) : trapezoid_weights(rv, dt_);
      const EtdWeights c = opts_.memory == MemoryScheme::Exponential ? etd_weights(rd, dt_) : trapezoid_weights(rd, dt_);
      wv[0][i] = a.a, wv[1][i] = a.b, wv[2][i] = a.c;
      wd[0][i] = c.a, wd[1][i] = c.b, wd[2][i] = c.c;
    }
    wv_.push_back(std::move(wv));
    wd_.push_back(std::move(wd));
  }
  apply_dirichlet_u(0.0);
  ops_.sym_grad(u_, e_);
}

void Solver::apply_dirichlet_u(double t) {
  const Grid& gr = grid();
  for (std::size_t k = 0; k < dirichlet_nodes_.size(); ++k) {
    const std::size_t i = dirichlet_nodes_[k];
    g_(t, gr.coords(i), dirichlet_faces_[k], &g_now_[k * dim_]);
    for (int a = 0; a < dim_; ++a) u_[a][i] = g_now_[k * dim_ + a];
  }
}

void Solver::set_initial_state(const MultiField& u0, const MultiField& v_minus_half) {
  if (n_ != 0 || prepared_) throw std::logic_error("initial state can only be set before the first step");
  if (u0.size() != static_cast<std::size_t>(dim_) || v_minus_half.size() != u0.size())
    throw std::invalid_argument("initial state has the wrong number of components");
  for (int a = 0; a < dim_; ++a)
    if (u0[a].size() != grid().size() || v_minus_half[a].size() != grid().size())
      throw std::invalid_argument("initial state does not match the grid");
  u_ = u0;
  v_old_ = v_minus_half;
  apply_dirichlet_u(0.0);
  ops_.sym_grad(u_, e_);
}

void Solver::compute_stress() {
  const std::size_t n = grid().size();
  const int ns = sym_size(dim_);
  const int nv = update_memory_ ? mf_.n_viscous() : 0;
  std::array<bool, 6> diag{};
  for (int c = 0; c < ns; ++c) diag[c] = is_diag(dim_, c);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    double tr_e = 0.0;
    for (int c = 0; c < ns; ++c)
      if (diag[c]) tr_e += e_[c][i];
    double s[6] = {0, 0, 0, 0, 0, 0};
    for (int j = 0; j < mf_.n_units(); ++j) {
      const double lam = mf_.lambda(j)[i], two_mu = 2.0 * mf_.mu(j)[i];
      if (j < nv) {
        const double pv = phiV_[j][i];
        const double tr_psi = tr_e - dim_ * pv;
        for (int c = 0; c < ns; ++c) {
          const double psi = e_[c][i] - phiD_[j][c][i] - (diag[c] ? pv : 0.0);
          s[c] += two_mu * psi + (diag[c] ? lam * tr_psi : 0.0);
        }
      } else {
        for (int c = 0; c < ns; ++c) s[c] += two_mu * e_[c][i] + (diag[c] ? lam * tr_e : 0.0);
      }
    }
    for (int c = 0; c < ns; ++c) s_[c][i] = s[c];
  }
}

double Solver::potential_density(std::size_t i) const {
  const int ns = sym_size(dim_);
  const int nv = update_memory_ ? mf_.n_viscous() : 0;
  double tr_e = 0.0;
  for (int p = 0; p < dim_; ++p) tr_e += e_[SymTensor::packed_index(dim_, p, p)][i];
  double w = 0.0;
  for (int j = 0; j < mf_.n_units(); ++j) {
    const double lam = mf_.lambda(j)[i], mu = mf_.mu(j)[i];
    const double pv = j < nv ? phiV_[j][i] : 0.0;
    const double tr_psi = tr_e - dim_ * pv;
    double f2 = 0.0;
    for (int c = 0; c < ns; ++c) {
      const bool dg = is_diag(dim_, c);
      const double psi = e_[c][i] - (j < nv ? phiD_[j][c][i] : 0.0) - (dg ? pv : 0.0);
      f2 += (dg ? 1.0 : 2.0) * psi * psi;
    }
    w += lam * tr_psi * tr_psi + 2.0 * mu * f2;
  }
  return w;
}

double Solver::kinetic_density(std::size_t i) const {
  double k = 0.0;
  for (int a = 0; a < dim_; ++a) k += v_mid_[a][i] * v_mid_[a][i];
  return mf_.rho()[i] * k;
}

void Solver::prepare() {
  if (prepared_) return;
  const Grid& gr = grid();
  const std::size_t n = gr.size();
  compute_stress();
  ops_.tensor_div(s_, weak_faces_, div_);
  const Field& rho = mf_.rho();
  for (int a = 0; a < dim_; ++a) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) v_new_[a][i] = v_old_[a][i] + dt_ * div_[a][i] / rho[i];
  }
  const double t1 = (n_ + 1) * dt_;
  for (std::size_t k = 0; k < dirichlet_nodes_.size(); ++k) {
    const std::size_t i = dirichlet_nodes_[k];
    g_(t1, gr.coords(i), dirichlet_faces_[k], &g_next_[k * dim_]);
    for (int a = 0; a < dim_; ++a) v_new_[a][i] = (g_next_[k * dim_ + a] - g_now_[k * dim_ + a]) / dt_;
  }
  for (int a = 0; a < dim_; ++a)
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(v_new_[a][i]))
        throw InstabilityError(n_, "non-finite velocity at step " + std::to_string(n_) + ", node " +
                                       std::to_string(i) + " (time step too large or invalid material?)");
      v_mid_[a][i] = 0.5 * (v_old_[a][i] + v_new_[a][i]);
    }

  // Modified leapfrog energy of level n, summed in a fixed order.
  const Field& hw = ops_.norm_weights();
  double kin = 0.0, pot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double vv = 0.0;
    for (int a = 0; a < dim_; ++a) vv += v_old_[a][i] * v_new_[a][i];
    kin += hw[i] * rho[i] * vv;
    pot += hw[i] * potential_density(i);
  }
  energy_ = 0.5 * (kin + pot);
  prepared_ = true;
}

void Solver::advance() {
  if (!prepared_) throw std::logic_error("Solver::advance called before prepare");
  const Grid& gr = grid();
  const std::size_t n = gr.size();
  for (int a = 0; a < dim_; ++a)
    for (std::size_t i = 0; i < n; ++i) u_[a][i] += dt_ * v_new_[a][i];
  for (std::size_t k = 0; k < dirichlet_nodes_.size(); ++k) {
    const std::size_t i = dirichlet_nodes_[k];
    for (int a = 0; a < dim_; ++a) u_[a][i] = g_next_[k * dim_ + a];
  }
  std::swap(g_now_, g_next_);
  ops_.sym_grad(u_, e_next_);

  dissipation_ = 0.0;
  if (update_memory_) {
    const int ns = sym_size(dim_);
    const Field& hw = ops_.norm_weights();
    std::array<bool, 6> diag{};
    for (int c = 0; c < ns; ++c) diag[c] = is_diag(dim_, c);
    double diss = 0.0;
    for (int j = 0; j < mf_.n_viscous(); ++j) {
      const auto& wv = wv_[j];
      const auto& wd = wd_[j];
      const Field& eta = mf_.eta(j);
      for (std::size_t i = 0; i < n; ++i) {
        double tr0 = 0.0, tr1 = 0.0;
        for (int c = 0; c < ns; ++c)
          if (diag[c]) tr0 += e_[c][i], tr1 += e_next_[c][i];
        const double f0 = tr0 / dim_, f1 = tr1 / dim_;
        const double pv0 = phiV_[j][i];
        const double pv1 = wv[0][i] * pv0 + wv[1][i] * f0 + wv[2][i] * (f1 - f0);
        phiV_[j][i] = pv1;
        double dphi2 = dim_ * (pv1 - pv0) * (pv1 - pv0);
        for (int c = 0; c < ns; ++c) {
          const double d0 = e_[c][i] - (diag[c] ? f0 : 0.0), d1 = e_next_[c][i] - (diag[c] ? f1 : 0.0);
          const double p0 = phiD_[j][c][i];
          const double p1 = wd[0][i] * p0 + wd[1][i] * d0 + wd[2][i] * (d1 - d0);
          phiD_[j][c][i] = p1;
          dphi2 += (diag[c] ? 1.0 : 2.0) * (p1 - p0) * (p1 - p0);
        }
        diss += hw[i] * eta[i] * dphi2;
      }
    }
    dissipation_ = diss / (dt_ * dt_);
  }
  std::swap(e_, e_next_);
  std::swap(v_old_, v_new_);
  ++n_;
  prepared_ = false;
}

double run_dt(const MaterialField& m, const SolverOptions& o, double duration, int* steps) {
  const double dt0 = stable_dt(m, o.cfl);
  if (!(duration >= 0.0) || !std::isfinite(duration)) throw std::invalid_argument("duration must be >= 0");
  const int n = duration > 0.0 ? static_cast<int>(std::ceil(duration / dt0 - 1e-9)) : 0;
  if (steps) *steps = n;
  return n > 0 ? duration / n : dt0;
}

std::set<int> snapshot_steps(const SnapshotSchedule& s, double dt, int steps) {
  std::set<int> out;
  for (double t : s.times) {
    if (t < 0.0) continue;
    const int k = static_cast<int>(std::lround(t / dt));
    if (k <= steps) out.insert(k);
  }
  if (s.interval > 0.0)
    for (int m = 0;; ++m) {
      const int k = static_cast<int>(std::lround(m * s.interval / dt));
      if (k > steps) break;
      out.insert(k);
    }
  if (s.every_steps > 0)
    for (int k = 0; k <= steps; k += s.every_steps) out.insert(k);
  if (s.include_final) out.insert(steps);
  return out;
}

RunResult run(const RunSpec& spec, const RunHooks& hooks) {
  spec.grid.validate();
  spec.boundary.validate(spec.grid.dim, spec.source);
  const MaterialField mf(spec.grid, spec.material, spec.regions);
  RunResult res;
  res.alpha_max = mf.alpha_max();
  res.dt = run_dt(mf, spec.options, spec.duration, &res.steps);
  Solver solver(mf, spec.boundary, make_dirichlet_data(spec.source, spec.grid.dim), spec.options, res.dt);
  const std::set<int> snaps = snapshot_steps(spec.snapshots, res.dt, res.steps);

  double last_diss = 0.0;
  for (int n = 0;; ++n) {
    solver.prepare();
    const LevelView lv = solver.level();
    const double cone = hooks.cone_energy ? hooks.cone_energy(lv) : std::numeric_limits<double>::quiet_NaN();
    res.trace.push_back({lv.t, solver.energy(), cone, last_diss});
    if (hooks.keep_snapshots && snaps.count(n)) res.snapshots.push_back({n, lv.t, solver.u(), hooks.keep_velocity ? solver.v_mid() : MultiField{}});
    if (hooks.on_level) hooks.on_level(lv);
    if (n == res.steps) break;
    solver.advance();
    last_diss = solver.dissipation();
  }
  return res;
}

}  // namespace visco
