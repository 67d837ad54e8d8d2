#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "visco/solver.hpp"

using namespace visco;

namespace {

Grid square(int cells, double h) {
  Grid g;
  g.dim = 2;
  g.cells = {cells, cells, 1};
  g.h = h;
  return g;
}

Material esls(double eta) { return Material({{{1.0, 1.0, 2}, eta}, {{1.0, 1.0, 2}, std::nullopt}}, 1.0); }

DirichletData zero_data(int dim) {
  return [dim](double, const std::array<double, 3>&, unsigned, double* g) {
    for (int a = 0; a < dim; ++a) g[a] = 0.0;
  };
}

// Smooth bump in both displacement components, vanishing near the boundary.
MultiField bump(const Grid& g, double amp) {
  MultiField u = make_field(g, 2);
  const double cx = 0.5 * g.extent(0), cy = 0.5 * g.extent(1), r = 0.3 * g.extent(0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = g.coords(i);
    const double s = ((x[0] - cx) * (x[0] - cx) + (x[1] - cy) * (x[1] - cy)) / (r * r);
    const double b = s < 1.0 ? std::pow(1.0 - s, 4) : 0.0;
    u[0][i] = amp * b;
    u[1][i] = -0.5 * amp * b;
  }
  return u;
}

RunSpec driven_spec(int cells, double duration) {
  RunSpec s;
  s.grid = square(cells, 1.0 / cells);
  s.material = esls(2.0);
  s.source.enabled = true;
  s.source.face = XLo;
  s.source.frequency = 2.0;
  s.source.amplitude = 1e-3;
  s.source.ramp = 0.25;
  s.source.duration = 0.5;
  s.source.center = {0.0, 0.5, 0.0};
  s.source.half_width = 0.3;
  s.duration = duration;
  return s;
}

}  // namespace

TEST_CASE("zero state with zero source stays exactly zero") {
  const MaterialField mf(square(10, 0.1), esls(1.0));
  Solver s(mf, BoundarySpec{}, zero_data(2), {}, stable_dt(mf, 0.5));
  for (int n = 0; n < 20; ++n) s.step();
  s.prepare();
  for (const auto& c : s.u())
    for (double x : c) CHECK(x == 0.0);
  for (int j = 0; j < mf.n_viscous(); ++j) {
    for (double x : s.phiV(j)) CHECK(x == 0.0);
    for (const auto& c : s.phiD(j))
      for (double x : c) CHECK(x == 0.0);
  }
  CHECK(s.energy() == 0.0);
}

TEST_CASE("stable_dt from the operator norm") {
  // lambda = 2, mu = 1, rho = 1, d = 2: sup of (Cz, z)/|z|^2 over symmetric z.
  const double norm = oracle::brute_force_rayleigh(oracle::isotropic_dense(2.0, 1.0, 2), 2, +1, 11);
  CHECK(norm == doctest::Approx(6.0).epsilon(1e-6));
  const Material m({{{2.0, 1.0, 2}, std::nullopt}}, 1.0);
  const Grid g = square(8, 0.01);
  const MaterialField mf(g, m);
  const double dt = stable_dt(mf, 0.5);
  CHECK(dt == doctest::Approx(0.5 * 0.01 / (std::sqrt(2.0) * std::sqrt(norm))).epsilon(1e-7));

  Grid g2 = g;
  g2.h = 0.02;
  CHECK(stable_dt(MaterialField(g2, m), 0.5) == doctest::Approx(2.0 * dt).epsilon(1e-15));

  const Material m2({{{2.0, 1.0, 2}, std::nullopt}, {{0.1, 0.05, 2}, 3.0}}, 1.0);
  CHECK(stable_dt(MaterialField(g, m2), 0.5) <= dt);

  CHECK_THROWS_AS(stable_dt(mf, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(stable_dt(mf, 1.5), std::invalid_argument);
  CHECK_NOTHROW(stable_dt(mf, 1.0));
}

TEST_CASE("run_dt divides the duration and snapshot times round to the nearest step") {
  const MaterialField mf(square(10, 0.1), esls(1.0));
  int steps = 0;
  const double dt = run_dt(mf, {}, 0.37, &steps);
  CHECK(dt <= stable_dt(mf, 0.5));
  CHECK(steps * dt == doctest::Approx(0.37).epsilon(1e-14));
  SnapshotSchedule sch;
  sch.times = {0.0104, 5.0};
  sch.include_final = false;
  CHECK(snapshot_steps(sch, 0.001, 100) == std::set<int>{10});
  sch.every_steps = 40;
  sch.include_final = true;
  CHECK(snapshot_steps(sch, 0.001, 100) == std::set<int>{0, 10, 40, 80, 100});
}

TEST_CASE("T = 0 gives the initial snapshot only") {
  RunSpec s = driven_spec(10, 0.0);
  const RunResult r = run(s);
  CHECK(r.steps == 0);
  REQUIRE(r.snapshots.size() == 1);
  CHECK(r.snapshots[0].t == 0.0);
  CHECK(r.trace.size() == 1);
  CHECK(r.trace[0].total == 0.0);
}

TEST_CASE("identical specs give bit-identical runs") {
  RunSpec s = driven_spec(16, 0.3);
  s.snapshots.every_steps = 17;
  const RunResult a = run(s), b = run(s);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) {
    CHECK(a.snapshots[k].u == b.snapshots[k].u);
    CHECK(a.snapshots[k].v == b.snapshots[k].v);
  }
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].total == b.trace[k].total);
    CHECK(a.trace[k].dissipation == b.trace[k].dissipation);
  }
}

TEST_CASE("frozen dashpots reproduce the elastic run exactly") {
  RunSpec s = driven_spec(16, 0.4);
  s.snapshots.every_steps = 25;
  s.options.frozen_dashpots = true;
  RunSpec e = s;
  e.options.frozen_dashpots = false;
  e.material = Material({{{1.0, 1.0, 2}, std::nullopt}, {{1.0, 1.0, 2}, std::nullopt}}, 1.0);
  const RunResult a = run(s), b = run(e);
  REQUIRE(a.snapshots.size() == b.snapshots.size());
  for (std::size_t k = 0; k < a.snapshots.size(); ++k) CHECK(a.snapshots[k].u == b.snapshots[k].u);
  for (std::size_t k = 0; k < a.trace.size(); ++k) {
    CHECK(a.trace[k].total == b.trace[k].total);
    CHECK(a.trace[k].dissipation == 0.0);
  }

  const MaterialField mf(s.grid, s.material);
  Solver solver(mf, s.boundary, make_dirichlet_data(s.source, 2), s.options, run_dt(mf, s.options, 0.1));
  for (int n = 0; n < 30; ++n) solver.step();
  for (double x : solver.phiV(0)) CHECK(x == 0.0);
}

TEST_CASE("elastic energy is conserved and viscous energy decays at the dissipation rate") {
  const Grid g = square(40, 1.0 / 40);
  BoundarySpec bc;  // x_lo clamped, remaining faces traction free
  for (MemoryScheme scheme : {MemoryScheme::Exponential, MemoryScheme::Trapezoidal}) {
    for (double eta : {0.0, 0.05, 1.0, 20.0}) {
      CAPTURE(eta);
      const Material m = eta > 0.0 ? esls(eta) : Material({{{1.0, 1.0, 2}, std::nullopt}}, 1.0);
      const MaterialField mf(g, m);
      SolverOptions o;
      o.memory = scheme;
      Solver s(mf, bc, zero_data(2), o, stable_dt(mf, 0.5));
      const MultiField u0 = bump(g, 1e-3);
      s.set_initial_state(u0, make_field(g, 2));
      s.prepare();
      double e_prev = s.energy();
      const double e0 = e_prev;
      CHECK(e0 > 0.0);
      double worst_rise = -1.0, worst_track = 0.0;
      for (int n = 0; n < 400; ++n) {
        s.advance();
        const double d = s.dissipation() * s.dt();
        s.prepare();
        const double e = s.energy();
        worst_rise = std::max(worst_rise, (e - e_prev) / e_prev);
        if (eta == 0.0) {
          CHECK(std::abs(e - e0) <= 1e-12 * e0);
        } else if (d > 1e-6 * e) {
          worst_track = std::max(worst_track, std::abs((e_prev - e) - d) / d);
        }
        e_prev = e;
      }
      if (eta > 0.0) {
        CHECK(worst_rise <= 0.0);
        CHECK(e_prev < e0);
        // The Crank-Nicolson memory update makes the decrement equal the dissipation.
        CHECK(worst_track < (scheme == MemoryScheme::Trapezoidal ? 1e-8 : 0.05));
      }
    }
  }
}

TEST_CASE("memory variables follow the closed form under uniform strain growth") {
  // u = (gamma t y, 0): the strain is uniform with e_xy = gamma t / 2, so every
  // node carries d(psi)/dt = -r psi + e_dot with r = 2 mu / eta in the deviatoric part.
  const double gamma = 0.01, eta = 0.7;
  const Grid g = square(12, 0.1);
  const MaterialField mf(g, esls(eta));
  BoundarySpec bc;
  for (auto& f : bc.faces) f = BoundaryKind::Dirichlet;
  DirichletData data = [gamma](double t, const std::array<double, 3>& x, unsigned, double* out) {
    out[0] = gamma * t * x[1];
    out[1] = 0.0;
  };
  const double dt = stable_dt(mf, 0.5);
  Solver s(mf, bc, data, {}, dt);
  MultiField v0 = make_field(g, 2);
  for (std::size_t i = 0; i < g.size(); ++i) v0[0][i] = gamma * g.coords(i)[1];
  s.set_initial_state(make_field(g, 2), v0);
  const std::size_t centre = g.index(6, 6);
  const int xy = SymTensor::packed_index(2, 0, 1);
  const double r = 2.0 * 1.0 / eta, k = 0.5 * gamma;
  for (int n = 1; n <= 300; ++n) {
    s.step();
    const double t = n * dt;
    const double psi_exact = k * (1.0 - std::exp(-r * t)) / r;
    const double psi = s.strain()[xy][centre] - s.phiD(0)[xy][centre];
    CHECK(std::abs(s.strain()[xy][centre] - k * t) <= 1e-12);
    CHECK(std::abs(psi - psi_exact) <= 1e-9 * psi_exact);
    CHECK(std::abs(s.phiV(0)[centre]) <= 1e-15);
  }
}

TEST_CASE("plane shear wave travels at the shear speed on a 400-cell strip") {
  // Pulse u_y = f(x - c t) with c = sqrt(mu / rho) = 0.5; the strip carries the
  // exact travelling wave on every face.
  const double mu = 0.25, rho = 1.0, c = std::sqrt(mu / rho);
  Grid g;
  g.dim = 2;
  g.cells = {400, 8, 1};
  g.h = 1.0 / 400;
  const MaterialField mf(g, Material({{{0.5, mu, 2}, std::nullopt}}, rho));
  auto f = [](double s) { return std::exp(-std::pow((s - 0.25) / 0.03, 2)); };
  BoundarySpec bc;
  for (auto& face : bc.faces) face = BoundaryKind::Dirichlet;
  DirichletData data = [&](double t, const std::array<double, 3>& x, unsigned, double* out) {
    out[0] = 0.0;
    out[1] = f(x[0] - c * t);
  };
  const double dt = stable_dt(mf, 0.5);
  Solver s(mf, bc, data, {}, dt);
  MultiField u0 = make_field(g, 2), v0 = make_field(g, 2);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coords(i)[0];
    u0[1][i] = f(x);
    v0[1][i] = (f(x) - f(x + c * dt)) / dt;
  }
  s.set_initial_state(u0, v0);

  auto centre_line = [&] {
    std::vector<double> line(401);
    for (int i = 0; i <= 400; ++i) line[i] = s.u()[1][g.index(i, 4)];
    return line;
  };
  const std::vector<double> first = centre_line();
  const int steps = static_cast<int>(std::lround(0.9 / dt));
  for (int n = 0; n < steps; ++n) s.step();
  const std::vector<double> last = centre_line();

  // Cross-correlation peak with parabolic refinement.
  auto corr = [&](int lag) {
    double acc = 0.0;
    for (int i = 0; i + lag <= 400; ++i) acc += first[i] * last[i + lag];
    return acc;
  };
  int best = 0;
  for (int lag = 1; lag <= 400; ++lag)
    if (corr(lag) > corr(best)) best = lag;
  const double cm = corr(best - 1), c0 = corr(best), cp = corr(best + 1);
  const double lag = best + 0.5 * (cm - cp) / (cm - 2.0 * c0 + cp);
  const double speed = lag * g.h / (steps * dt);
  CHECK(std::abs(speed - c) <= 0.02 * c);
}

TEST_CASE("smooth drive converges at second order under grid refinement") {
  std::vector<MultiField> sols;
  const std::vector<int> levels{24, 48, 96, 192};
  for (int cells : levels) sols.push_back(run(driven_spec(cells, 0.6)).snapshots.back().u);
  std::vector<double> err;
  for (std::size_t l = 0; l + 1 < levels.size(); ++l) {
    const int c = levels[l];
    double e2 = 0.0;
    for (int i = 0; i <= c; ++i)
      for (int j = 0; j <= c; ++j)
        for (int a = 0; a < 2; ++a) {
          const double d = sols[l][a][i * (c + 1) + j] - sols[l + 1][a][2 * i * (2 * c + 1) + 2 * j];
          e2 += d * d / (double(c) * c);
        }
    err.push_back(std::sqrt(e2));
  }
  for (double o : oracle::observed_orders(err)) CHECK(o >= 1.9);
}

TEST_CASE("an oversized time step is reported with its step index") {
  const Grid g = square(16, 1.0 / 16);
  const MaterialField mf(g, esls(1.0));
  Solver s(mf, BoundarySpec{}, zero_data(2), {}, 8.0 * stable_dt(mf, 1.0));
  s.set_initial_state(bump(g, 1e-3), make_field(g, 2));
  int failed_at = -1;
  try {
    for (int n = 0; n < 100000; ++n) s.step();
  } catch (const InstabilityError& e) {
    failed_at = e.step();
  }
  CHECK(failed_at > 0);
  CHECK(failed_at == s.step_index());
}

TEST_CASE("boundary labels and the corner rule") {
  SourceSpec src;
  src.enabled = true;
  src.face = XHi;
  BoundarySpec bc;
  CHECK_THROWS_AS(bc.validate(2, src), std::invalid_argument);
  src.face = XLo;
  CHECK_NOTHROW(bc.validate(2, src));
  for (auto& f : bc.faces) f = BoundaryKind::Dirichlet;
  CHECK_THROWS_AS(bc.validate(2, src), std::invalid_argument);
  src.face = ZLo;
  CHECK_THROWS_AS(bc.validate(2, src), std::invalid_argument);

  // Corner (0, 0) lies on clamped x_lo and free y_lo: it is treated as Dirichlet.
  const Grid g = square(10, 0.1);
  const MaterialField mf(g, esls(1.0));
  Solver s(mf, BoundarySpec{}, zero_data(2), {}, stable_dt(mf, 0.5));
  CHECK(s.dirichlet_mask()[g.index(0, 0)] == 1);
  CHECK(s.dirichlet_mask()[g.index(10, 0)] == 0);
  CHECK(s.dirichlet_mask()[g.index(0, 5)] == 1);
}

TEST_CASE("regions rescale the base material") {
  const Grid g = square(20, 0.05);
  Region ball;
  ball.center = {0.5, 0.5, 0.0};
  ball.radius = 0.2;
  ball.mu_scale = 2.25;
  const MaterialField mf(g, esls(1.0), {ball});
  CHECK(mf.mu(0)[g.index(10, 10)] == 2.25);
  CHECK(mf.mu(1)[g.index(10, 10)] == 2.25);
  CHECK(mf.mu(0)[g.index(1, 1)] == 1.0);
  CHECK(mf.shear_speed()[g.index(10, 10)] == doctest::Approx(std::sqrt(4.5)));
  CHECK(mf.smoothness_lint() == doctest::Approx(1.25 / 2.25));
  CHECK(mf.at(g.index(10, 10)).mu_sum() == doctest::Approx(4.5));

  ball.blend = 0.2;
  const MaterialField smooth(g, esls(1.0), {ball});
  CHECK(smooth.smoothness_lint() < mf.smoothness_lint());
  const double w = ball.weight({0.7, 0.5, 0.0}, 2);
  CHECK(w == doctest::Approx(0.5));

  Region box;
  box.shape = Region::Shape::Box;
  box.lo = {0.0, 0.0, 0.0};
  box.hi = {0.2, 0.2, 0.0};
  box.rho_scale = 0.5;
  const MaterialField boxed(g, esls(1.0), {box});
  CHECK(boxed.rho()[g.index(2, 2)] == 0.5);
  CHECK(boxed.rho()[g.index(5, 5)] == 1.0);
  CHECK(boxed.alpha_max() == doctest::Approx(std::sqrt(2.0 * 4.0 / 0.5)));
}
