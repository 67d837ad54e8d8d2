#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "visco/fsp.hpp"
#include "visco/inversion.hpp"

using namespace visco;

namespace {

Grid square(int cells, double h) {
  Grid g;
  g.dim = 2;
  g.cells = {cells, cells, 1};
  g.h = h;
  return g;
}

// u = (0, w(t - x / c)) with a Gaussian-windowed sinusoid w, sampled every dts.
std::vector<Snapshot> plane_wave(const Grid& g, double c, double f, double dts, int count) {
  std::vector<Snapshot> out;
  for (int k = 0; k < count; ++k) {
    Snapshot s{k, k * dts, make_field(g, 2), {}};
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double tau = s.t - g.coords(i)[0] / c - 0.3;
      s.u[1][i] = std::exp(-tau * tau / (0.12 * 0.12)) * std::sin(2.0 * std::numbers::pi * f * tau);
    }
    out.push_back(std::move(s));
  }
  return out;
}

SpeedOptions along_x(SpeedMethod m, double f) {
  SpeedOptions o;
  o.method = m;
  o.frequency = f;
  o.footprint_lo = {0.0, 0.0, 0.0};
  o.footprint_hi = {0.0, 1.0, 0.0};
  o.baseline = 0.1;
  return o;
}

// ESLS medium with unrelaxed shear speed 1, driven on x_lo.
RunSpec driven(int cells) {
  RunSpec s;
  s.grid = square(cells, 1.0 / cells);
  s.material = Material({{{0.5, 0.5, 2}, 0.2}, {{0.5, 0.5, 2}, std::nullopt}}, 1.0);
  s.source.enabled = true;
  s.source.face = XLo;
  s.source.frequency = 2.0;
  s.source.amplitude = 1e-3;
  s.source.ramp = 0.25;
  s.source.duration = 1.0;
  s.source.center = {0.0, 0.5, 0.0};
  s.source.half_width = 0.3;
  s.duration = 0.6;
  return s;
}

Region disc(double scale) {
  Region r;
  r.center = {0.3, 0.5, 0.0};
  r.radius = 0.1;
  r.mu_scale = scale;
  return r;
}

}  // namespace

TEST_CASE("method and signal names") {
  CHECK(speed_method_from_string(to_string(SpeedMethod::PhaseGradient)) == SpeedMethod::PhaseGradient);
  CHECK(speed_method_from_string("time_of_flight") == SpeedMethod::TimeOfFlight);
  CHECK_THROWS_AS(speed_method_from_string("tof"), std::invalid_argument);
  CHECK(speed_signal_from_string(to_string(SpeedSignal::Displacement)) == SpeedSignal::Displacement);
  CHECK_THROWS_AS(speed_signal_from_string("rot"), std::invalid_argument);
}

TEST_CASE("footprint of a drive") {
  const Grid g = square(20, 0.05);
  SourceSpec src;
  src.face = YHi;
  src.center = {0.9, 1.0, 0.0};
  src.half_width = 0.2;
  SpeedOptions o;
  set_footprint(o, src, g);
  CHECK(o.footprint_lo[0] == doctest::Approx(0.7));
  CHECK(o.footprint_hi[0] == doctest::Approx(1.0));
  CHECK(o.footprint_lo[1] == doctest::Approx(1.0));
  CHECK(o.footprint_hi[1] == doctest::Approx(1.0));
}

TEST_CASE("speed map statistics") {
  SpeedMap m{square(8, 1.0), Field(81, std::nan("")), std::vector<unsigned char>(81, 0)};
  CHECK(std::isnan(m.median()));
  for (int i = 0; i < 4; ++i) {
    m.mask[i] = 1;
    m.speed[i] = 1.0 + 0.1 * i;
  }
  CHECK(m.count() == 4);
  CHECK(m.median() == doctest::Approx(1.15));
  CHECK(m.fraction_within(1.0, 0.15) == doctest::Approx(0.5));
  CHECK(m.median([](const std::array<double, 3>& x) { return x[1] < 1.5; }) == doctest::Approx(1.05));
}

TEST_CASE("preconditions of the speed estimators") {
  const Grid g = square(16, 1.0 / 16);
  auto snaps = plane_wave(g, 1.0, 4.0, 0.01, 40);
  CHECK_THROWS_AS(estimate_speed(g, std::vector<Snapshot>(snaps.begin(), snaps.begin() + 9), {}),
                  std::invalid_argument);
  SpeedOptions pg;
  pg.method = SpeedMethod::PhaseGradient;
  CHECK_THROWS_AS(estimate_speed(g, snaps, pg), std::invalid_argument);
  pg.frequency = 1.0;  // record spans 0.39 s, less than one period
  CHECK_THROWS_AS(estimate_speed(g, snaps, pg), std::invalid_argument);
  auto uneven = snaps;
  uneven[5].t += 0.003;
  CHECK_THROWS_AS(estimate_speed(g, uneven, {}), std::invalid_argument);
  auto flat = snaps;
  for (auto& s : flat)
    for (auto& f : s.u) std::fill(f.begin(), f.end(), 0.0);
  CHECK_THROWS_AS(estimate_speed(g, flat, {}), std::runtime_error);
}

TEST_CASE("both estimators recover the speed of an analytic plane wave") {
  const Grid g = square(64, 1.0 / 64);
  const double c = 1.7, f = 4.0;
  const auto snaps = plane_wave(g, c, f, 0.005, 301);
  for (auto method : {SpeedMethod::TimeOfFlight, SpeedMethod::PhaseGradient})
    for (auto signal : {SpeedSignal::Displacement, SpeedSignal::Curl}) {
      CAPTURE(to_string(method));
      CAPTURE(to_string(signal));
      SpeedOptions o = along_x(method, f);
      o.signal = signal;
      const SpeedMap m = estimate_speed(g, snaps, o);
      CHECK(m.count() > g.size() / 2);
      CHECK(m.fraction_within(c, 0.01) >= 0.95);
      CHECK(m.median() == doctest::Approx(c).epsilon(0.005));
      for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::isnan(m.speed[i]) == !m.mask[i]);
    }
}

TEST_CASE("time of flight on a simulated homogeneous medium") {
  // Reduced version of the bundled homog_shear_2d run: 100 cells, 5 Hz.
  RunSpec s;
  s.grid = square(100, 0.01);
  s.material = Material({{{1.0, 1.0, 2}, std::nullopt}}, 1.0);
  s.boundary.faces[YLo] = s.boundary.faces[YHi] = BoundaryKind::Dirichlet;
  s.source.enabled = true;
  s.source.face = XLo;
  s.source.frequency = 5.0;
  s.source.amplitude = 1e-3;
  s.source.ramp = 0.1;
  s.source.duration = 0.3;
  s.source.center = {0.0, 0.5, 0.0};
  s.source.half_width = 0.4;
  s.duration = 1.3;
  s.snapshots.every_steps = 6;
  s.snapshots.include_final = false;
  RunHooks h;
  h.keep_velocity = false;
  const RunResult r = run(s, h);
  SpeedOptions o;
  set_footprint(o, s.source, s.grid);
  o.baseline = 0.2;
  o.gate = 0.3;
  o.max_lag = 0.4;
  const SpeedMap m = estimate_speed(s.grid, r.snapshots, o);
  CHECK(std::sqrt(s.material.mu_sum() / s.material.rho()) == 1.0);
  CHECK(m.median() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(m.fraction_within(1.0, 0.1) >= 0.8);
}

TEST_CASE("residual of recorded fields") {
  RunSpec s = driven(25);
  const MaterialField mf(s.grid, s.material);
  s.snapshots.every_steps = 1;
  const RunResult r = run(s);

  SUBCASE("zero field has zero residual") {
    auto zero = r.snapshots;
    for (auto& snap : zero)
      for (auto& f : snap.u) std::fill(f.begin(), f.end(), 0.0);
    for (double v : residual_field(zero, mf, s.boundary)) CHECK(v == 0.0);
  }
  SUBCASE("every-step sampling reproduces the scheme to rounding") {
    ResidualAccumulator acc(mf, s.boundary);
    for (const auto& snap : r.snapshots) acc.push(snap.t, snap.u);
    CHECK(acc.evaluations() == static_cast<int>(r.snapshots.size()) - 2);
    const Field res = acc.rms(), in = acc.inertia_rms();
    const double scale = *std::max_element(in.begin(), in.end());
    CHECK(scale > 0.0);
    CHECK(*std::max_element(res.begin(), res.end()) <= 1e-12 * scale);
    for (std::size_t i = 0; i < s.grid.size(); ++i)
      if (s.grid.ijk(i)[0] == 0) CHECK(acc.evaluated()[i] == 0);
  }
  SUBCASE("input errors") {
    CHECK_THROWS_AS(residual_field({r.snapshots[0], r.snapshots[1]}, mf, s.boundary), std::invalid_argument);
    std::vector<Snapshot> late(r.snapshots.begin() + 1, r.snapshots.begin() + 6);
    CHECK_THROWS_AS(residual_field(late, mf, s.boundary), std::invalid_argument);
    std::vector<Snapshot> gap{r.snapshots[0], r.snapshots[1], r.snapshots[3]};
    CHECK_THROWS_AS(residual_field(gap, mf, s.boundary), std::invalid_argument);
  }
}

TEST_CASE("self-residual floor vanishes under joint refinement") {
  std::vector<double> floors;
  for (int cells : {25, 50, 100}) {
    const auto rep = uniqueness_experiment(driven(cells), driven(cells).material, {});
    CHECK(rep.pass());
    CHECK(rep.counts.match_detected == 0);
    floors.push_back(rep.floor_max / rep.inertia_max);
  }
  for (double o : oracle::observed_orders(floors)) CHECK(o >= 1.0);
}

TEST_CASE("discrimination grows with the speed contrast") {
  double last = 0.0;
  for (double scale : {1.05, 1.1, 1.2, 1.5}) {
    CAPTURE(scale);
    const auto rep = uniqueness_experiment(driven(50), driven(50).material, {disc(scale)});
    REQUIRE(rep.regions.size() == 1);
    CHECK(rep.regions[0].residual_rms > last);
    last = rep.regions[0].residual_rms;
    if (scale >= 1.2) CHECK(rep.regions[0].verdict == "mismatch detected");
  }
}

TEST_CASE("matched materials give a match verdict everywhere") {
  const RunSpec s = driven(40);
  Region same = disc(1.0);
  const auto rep = uniqueness_experiment(s, s.material, {same});
  CHECK(rep.regions[0].verdict == "match");
  CHECK(std::count(rep.mismatch.begin(), rep.mismatch.end(), 1) == 0);
  CHECK(std::count(rep.detected.begin(), rep.detected.end(), 1) == 0);
  CHECK(rep.pass());
  CHECK_FALSE(rep.unidentifiable());
  const std::string csv = rep.contingency_csv();
  CHECK(csv.rfind("speeds,field,detected,not_detected\n", 0) == 0);
  CHECK(rep.to_text().find("result: pass") != std::string::npos);
}

TEST_CASE("snapshots too sparse for the second difference are rejected") {
  DiscriminationOptions o;
  o.every_steps = 40;
  CHECK_THROWS_AS(uniqueness_experiment(driven(25), driven(25).material, {disc(1.2)}, o), CoarseSnapshotError);
  o.every_steps = 0;
  CHECK_THROWS_AS(uniqueness_experiment(driven(25), driven(25).material, {}, o), std::invalid_argument);
  const Material other({{{1.0, 1.0, 2}, std::nullopt}}, 1.0);
  CHECK_THROWS_AS(uniqueness_experiment(driven(25), other, {}), std::invalid_argument);
}

TEST_CASE("traversed and unreached mismatches on the tissue-scale grid") {
  // Coarse copy of the bundled uniqueness run: 100 cells over 0.2 m.
  RunSpec s;
  s.grid = square(100, 2e-3);
  s.material = Material({{{500.0, 500.0, 2}, 10.0}, {{500.0, 500.0, 2}, std::nullopt}}, 1000.0);
  s.source.enabled = true;
  s.source.face = XLo;
  s.source.frequency = 50.0;
  s.source.amplitude = 1e-6;
  s.source.ramp = 0.01;
  s.source.duration = 0.04;
  s.source.center = {0.0, 0.1, 0.0};
  s.source.half_width = 0.03;
  s.duration = 0.08;
  Region d;
  d.center = {0.05, 0.1, 0.0};
  d.radius = 0.02;
  d.mu_scale = 1.2;
  Region corner;
  corner.shape = Region::Shape::Box;
  corner.lo = {0.18, 0.18, 0.0};
  corner.hi = {0.2, 0.2, 0.0};
  corner.mu_scale = 1.2;
  DiscriminationOptions o;
  o.every_steps = 2;  // same sampling interval as 4 steps on the 200-cell grid
  const auto rep = uniqueness_experiment(s, s.material, {d, corner}, o);
  CHECK(rep.regions[0].verdict == "mismatch detected");
  CHECK(rep.regions[0].detected >= 0.8 * rep.regions[0].active);
  CHECK(rep.regions[0].contrast() >= 10.0);
  CHECK(rep.regions[1].verdict == "unidentifiable");
  CHECK(rep.regions[1].detected == 0);
  CHECK(rep.unidentifiable());
  CHECK(rep.pass());

  // The quiescent set contains the ball left at the final time by the
  // shrinking cone of a ball that holds no source.
  s.duration = 0.03;
  const auto early = uniqueness_experiment(s, s.material, {}, o);
  const MaterialField mf(s.grid, s.material);
  const Cone cone{{0.12, 0.1, 0.0}, 0.08, alpha(mf, {0.12, 0.1, 0.0}, 0.08)};
  REQUIRE(cone.radius_at(s.duration) > 0.0);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < s.grid.size(); ++i)
    if (cone.contains(s.grid.coords(i), 2, s.duration)) {
      ++inside;
      CHECK(early.support[i] == 0);
    }
  CHECK(inside > 0);
}
