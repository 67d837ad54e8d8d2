#include "visco/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

#include "visco/fsp.hpp"
#include "visco/inversion.hpp"
#include "visco/ucp.hpp"

namespace visco {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string step_name(const char* dir, int step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/step_%08d.%s", dir, step, ext);
  return buf;
}

Field magnitude(const MultiField& u) {
  Field m(u.front().size(), 0.0);
  for (const auto& c : u)
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += c[i] * c[i];
  for (auto& x : m) x = std::sqrt(x);
  return m;
}

Field as_field(const std::vector<unsigned char>& mask) { return Field(mask.begin(), mask.end()); }

CommandOutput simulate(const RunConfig& c) {
  const RunSpec& spec = c.run;
  RunHooks hooks;
  hooks.keep_snapshots = c.output.snapshots || c.output.slices;
  const RunResult res = run(spec, hooks);

  CommandOutput out;
  for (const auto& s : res.snapshots) {
    if (c.output.snapshots) {
      std::vector<Field> fields = s.u;
      fields.insert(fields.end(), s.v.begin(), s.v.end());
      out.artifacts.push_back({step_name("snapshots", s.step, "vwf"), encode_vwf(make_vwf(spec.grid, s.t, fields))});
    }
    if (c.output.slices) out.artifacts.push_back({step_name("slices", s.step, "pgm"), pgm_slice(spec.grid, magnitude(s.u))});
  }
  out.artifacts.push_back({"energy.csv", energy_csv(res.trace)});

  std::ostringstream os;
  os << "material_kind: " << to_string(spec.material.kind()) << '\n'
     << "dt: " << fmt(res.dt) << '\n'
     << "steps: " << res.steps << '\n'
     << "alpha_max: " << fmt(res.alpha_max) << '\n'
     << "snapshots: " << res.snapshots.size() << '\n';
  if (c.energy.enabled) {
    const double t0 = spec.source.end_time();
    double e_max = 0.0;
    for (const auto& s : res.trace) e_max = std::max(e_max, std::abs(s.total));
    const double slack = c.energy.rel_slack * c.tolerance_scale;
    double worst = -INFINITY;
    int checked = 0, violations = 0;
    for (std::size_t n = 0; n + 1 < res.trace.size(); ++n) {
      if (res.trace[n].t < t0) continue;
      const double e = res.trace[n].total;
      const double rise = (res.trace[n + 1].total - e) / (e > 0.0 ? e : 1.0);
      worst = std::max(worst, rise);
      ++checked;
      if (rise > slack) ++violations;
    }
    out.pass = violations == 0 && checked > 0;
    os << "energy_max: " << fmt(e_max) << '\n'
       << "energy_check_from: " << fmt(t0) << '\n'
       << "energy_steps_checked: " << checked << '\n'
       << "energy_max_relative_rise: " << fmt(checked ? worst : 0.0) << '\n'
       << "energy_allowed_relative_rise: " << fmt(slack) << '\n'
       << "energy_violations: " << violations << '\n'
       << "result: " << (out.pass ? "pass" : "fail") << '\n';
  }
  out.summary = os.str();
  out.artifacts.push_back({"report.txt", out.summary});
  return out;
}

CommandOutput verify_fsp_command(const RunConfig& c) {
  const RunSpec& spec = c.run;
  Cone cone = c.fsp.cone;
  if (cone.speed == 0.0) cone.speed = alpha(MaterialField(spec.grid, spec.material, spec.regions), cone.center, cone.radius);
  cone.speed *= c.fsp.speed_scale;
  FspTolerances tol = c.fsp.tol;
  tol.field *= c.tolerance_scale;
  tol.rel *= c.tolerance_scale;
  tol.abs *= c.tolerance_scale;

  CommandOutput out;
  RunResult res;
  const FspReport rep = verify_fsp(spec, cone, tol, &res);
  out.artifacts.push_back({"energy.csv", energy_csv(res.trace)});
  out.artifacts.push_back({"fsp_report.txt", rep.to_text()});
  out.pass = rep.pass();
  std::ostringstream os;
  os << "cone_speed: " << fmt(cone.speed) << '\n'
     << "amplitude_ratio: " << fmt(rep.amplitude_ratio) << '\n'
     << "max_cone_ratio: " << fmt(rep.max_cone_ratio) << '\n'
     << "monitor: " << (rep.pass() ? "pass" : "fail") << '\n';

  if (c.fsp.control_scale > 0.0) {
    Cone slow = cone;
    slow.speed *= c.fsp.control_scale;
    const FspReport ctl = verify_fsp(spec, slow, tol);
    out.artifacts.push_back({"control_report.txt", ctl.to_text()});
    os << "control_speed: " << fmt(slow.speed) << '\n'
       << "control_amplitude_ratio: " << fmt(ctl.amplitude_ratio) << '\n'
       << "control: " << (ctl.pass() ? "passed (expected to fail)" : "failed as expected") << '\n';
    out.pass = out.pass && !ctl.pass();
  }
  if (!c.fsp.refinement.empty()) {
    const RefinementStudy st = fsp_refinement(spec, cone, c.fsp.refinement, tol);
    std::ostringstream csv;
    csv << "cells,leakage,order\n";
    bool orders_ok = true;
    for (std::size_t i = 0; i < st.cells.size(); ++i) {
      csv << st.cells[i] << ',' << fmt(st.leakage[i]) << ',';
      if (i > 0) {
        csv << fmt(st.orders[i - 1]);
        orders_ok = orders_ok && st.orders[i - 1] >= c.fsp.min_order;
      }
      csv << '\n';
    }
    out.artifacts.push_back({"refinement.csv", csv.str()});
    os << "refinement: " << (orders_ok ? "pass" : "fail") << '\n';
    out.pass = out.pass && orders_ok;
  }
  os << "result: " << (out.pass ? "pass" : "fail") << '\n';
  out.summary = os.str();
  out.artifacts.push_back({"summary.txt", out.summary});
  return out;
}

CommandOutput check_identities(const RunConfig& c) {
  const IdentityParams& p = c.identities;
  std::mt19937_64 rng(c.seed);
  std::ostringstream rep;
  int failures = 0;
  const std::vector<mpq_class> x0{mpq_class(1, 3), mpq_class(-1, 2), mpq_class(1, 5)};
  for (int k = 0; k < p.cases; ++k) {
    const PolyVec u = random_polyvec(rng, 3, 2 + k % 3);
    const Poly lambda = random_poly(rng, 3, p.coefficient_degree);
    const Poly mu = random_poly(rng, 3, p.coefficient_degree);
    const Poly a = random_poly(rng, 3, p.coefficient_degree);
    const auto s = check_stress_identities(u, lambda, mu);
    const auto w = check_weighted_identities(u, a, lambda, mu);
    std::size_t nonzero_probes = 0;
    for (const auto& v : principal_remainder_probes(a, lambda, mu, x0)) nonzero_probes += v != 0;
    const bool ok = s.all_zero() && w.all_zero() && nonzero_probes == 0;
    failures += !ok;
    rep << "case " << k << '\n' << s.summary() << w.summary() << "principal_probes_nonzero: " << nonzero_probes << '\n';
  }
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<std::array<double, 3>> pts(p.float_points);
  for (auto& x : pts) x = {U(rng), U(rng), U(rng)};
  double worst = 0.0;
  for (int k = 0; k < p.float_cases; ++k) {
    const PolyVec u = random_polyvec(rng, 3, 3);
    const Poly lambda = random_poly(rng, 3, p.coefficient_degree), mu = random_poly(rng, 3, p.coefficient_degree);
    worst = std::max(worst, float_identity_residual(u, lambda, mu, pts));
  }
  const double tol = p.float_tol * c.tolerance_scale;
  CommandOutput out;
  out.pass = failures == 0 && worst <= tol;
  std::ostringstream os;
  os << "seed: " << c.seed << '\n'
     << "exact_cases: " << p.cases << '\n'
     << "exact_failures: " << failures << '\n'
     << "float_cases: " << p.float_cases << '\n'
     << "float_points: " << p.float_points << '\n'
     << "float_max_residual: " << fmt(worst) << '\n'
     << "float_tolerance: " << fmt(tol) << '\n'
     << "result: " << (out.pass ? "pass" : "fail") << '\n';
  out.summary = os.str();
  out.artifacts.push_back({"identities.txt", rep.str()});
  out.artifacts.push_back({"summary.txt", out.summary});
  return out;
}

// Time profiles of the memory probes, one per test function in the set.
std::vector<std::function<double(double)>> memory_profile(int family, std::size_t n) {
  static const std::vector<std::vector<std::function<double(double)>>> families{
      {[](double) { return 1.0; }, [](double s) { return std::sin(5.0 * s); }},
      {[](double s) { return std::cos(3.0 * s); }, [](double s) { return s; }},
      {[](double s) { return std::exp(-s); }, [](double s) { return -1.0 + 4.0 * s * s; }}};
  std::vector<std::function<double(double)>> r;
  for (std::size_t k = 0; k < n; ++k) r.push_back(families[family][k % 2]);
  return r;
}

CommandOutput check_carleman(const RunConfig& c) {
  const CarlemanParams& p = c.carleman;
  CarlemanConfig cfg;
  cfg.x0 = p.x0;
  cfg.r0 = p.r0;
  cfg.validate();
  const std::vector<TestFunction> zs = p.bumps.empty() ? default_bumps() : p.bumps;
  for (const auto& z : zs) z.check_support(cfg);

  CommandOutput out;
  std::ostringstream os;
  const double beta0 = estimate_beta0(zs, cfg, beta_grid(p.scan_lo, p.scan_hi, p.scan_points), p.quadrature);
  os << "beta0: " << fmt(beta0) << '\n';
  bool trends_ok = true;
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const auto rows = probe_ratio(zs[k], cfg, beta_grid(beta0, p.span * beta0, p.probe_points), p.quadrature);
    const RatioTrend t = ratio_trend(rows);
    trends_ok = trends_ok && t.non_growing;
    out.artifacts.push_back({"carleman/bump_" + std::to_string(k) + ".csv", probe_csv(rows)});
    os << "bump_" << k << ": slope " << fmt(t.slope) << " first " << fmt(t.first) << " last " << fmt(t.last)
       << " empirical_a " << fmt(rows.back().empirical_a) << (t.non_growing ? " non-growing" : " GROWING") << '\n';
  }

  std::vector<TestFunction> set;
  for (int i : p.memory_bumps) set.push_back(zs[i]);
  std::ostringstream csv;
  csv << "beta,b0,b1,t,kernel,profile,bound_lhs,bound_rhs,absorb_lhs,absorb_rhs\n" << std::setprecision(12);
  int checked = 0, violated = 0;
  double min_bound = INFINITY, min_absorb = INFINITY;
  for (double beta : p.gram_betas) {
    const WeightedGram g = weighted_laplacian_gram(set, cfg, beta, p.quadrature);
    for (double b0 : p.b0)
      for (double b1 : p.b1) {
        CarlemanConfig kc = cfg;
        kc.b0 = b0;
        kc.b1 = b1;
        for (auto kind : {Kernel::Kind::Growth, Kernel::Kind::NegativeGrowth, Kernel::Kind::Oscillating,
                          Kernel::Kind::Constant})
          for (double frac : p.t_fractions)
            for (int fam = 0; fam < 3; ++fam) {
              const Kernel kernel{kind, b0, b1};
              const double t = frac * kc.T0();
              const MemoryProbe m = probe_memory(g, memory_profile(fam, set.size()), kernel, t);
              ++checked;
              violated += !(m.bound_holds() && m.absorb_holds());
              min_bound = std::min(min_bound, m.bound_slack());
              min_absorb = std::min(min_absorb, m.absorb_slack());
              csv << beta << ',' << b0 << ',' << b1 << ',' << t << ',' << kernel.name() << ',' << fam << ','
                  << m.bound_lhs << ',' << m.bound_rhs << ',' << m.absorb_lhs << ',' << m.absorb_rhs << '\n';
            }
      }
  }
  out.artifacts.push_back({"carleman/memory.csv", csv.str()});
  out.pass = trends_ok && violated == 0;
  os << "memory_configurations: " << checked << '\n'
     << "memory_violations: " << violated << '\n'
     << "min_bound_slack: " << fmt(min_bound) << '\n'
     << "min_absorb_slack: " << fmt(min_absorb) << '\n'
     << "result: " << (out.pass ? "pass" : "fail") << '\n';
  out.summary = os.str();
  out.artifacts.push_back({"summary.txt", out.summary});
  return out;
}

CommandOutput identify_speed(const RunConfig& c) {
  const RunSpec& spec = c.run;
  RunHooks hooks;
  hooks.keep_velocity = false;
  RunResult res = run(spec, hooks);
  // The final level is kept only when it falls on the sampling grid.
  const int k = spec.snapshots.every_steps;
  std::erase_if(res.snapshots, [k](const Snapshot& s) { return s.step % k != 0; });

  SpeedOptions opt = c.speed.options;
  set_footprint(opt, spec.source, spec.grid);
  if (opt.method == SpeedMethod::PhaseGradient && opt.frequency == 0.0) opt.frequency = spec.source.frequency;
  const SpeedMap map = estimate_speed(spec.grid, res.snapshots, opt);
  const MaterialField mf(spec.grid, spec.material, spec.regions);

  CommandOutput out;
  out.artifacts.push_back(
      {"speed.vwf", encode_vwf(make_vwf(spec.grid, spec.duration, {map.speed, as_field(map.mask), mf.shear_speed()}))});
  if (c.output.slices) out.artifacts.push_back({"slices/speed.pgm", pgm_slice(spec.grid, map.speed)});

  std::ostringstream os;
  const double truth = std::sqrt(spec.material.mu_sum() / spec.material.rho());
  os << "method: " << to_string(opt.method) << '\n'
     << "signal: " << to_string(opt.signal) << '\n'
     << "snapshots: " << res.snapshots.size() << '\n'
     << "masked_nodes: " << map.count() << '\n'
     << "median_speed: " << fmt(map.median()) << '\n'
     << "background_speed: " << fmt(truth) << '\n';
  if (c.speed.check == "homogeneous") {
    const double rel = c.speed.rel * c.tolerance_scale;
    const double frac = map.fraction_within(truth, rel);
    out.pass = frac >= c.speed.fraction;
    os << "fraction_within_" << fmt(rel) << ": " << fmt(frac) << '\n' << "required_fraction: " << fmt(c.speed.fraction) << '\n';
  } else if (c.speed.check == "ratio") {
    const Region& r = spec.regions.front();
    const int dim = spec.grid.dim;
    auto dist = [&r, dim](const std::array<double, 3>& x) {
      double s = 0.0;
      for (int a = 0; a < dim; ++a) s += (x[a] - r.center[a]) * (x[a] - r.center[a]);
      return std::sqrt(s);
    };
    const double in = map.median([&](const auto& x) { return dist(x) < c.speed.inner * r.radius; });
    const double bg = map.median([&](const auto& x) { return dist(x) > c.speed.outer * r.radius; });
    const double expected = std::sqrt(r.mu_scale / r.rho_scale);
    const double ratio = in / bg;
    const double rel = c.speed.ratio_rel * c.tolerance_scale;
    out.pass = std::isfinite(ratio) && std::abs(ratio / expected - 1.0) <= rel;
    os << "inclusion_median: " << fmt(in) << '\n'
       << "background_median: " << fmt(bg) << '\n'
       << "ratio: " << fmt(ratio) << '\n'
       << "expected_ratio: " << fmt(expected) << '\n'
       << "ratio_tolerance: " << fmt(rel) << '\n';
  }
  os << "result: " << (out.pass ? "pass" : "fail") << '\n';
  out.summary = os.str();
  out.artifacts.push_back({"speed.txt", out.summary});
  return out;
}

CommandOutput uniqueness(const RunConfig& c) {
  const UniquenessParams& u = c.uniqueness;
  const DiscriminationReport rep =
      uniqueness_experiment(c.run, u.b_base.value_or(c.run.material), u.b_regions, u.options);
  CommandOutput out;
  out.artifacts.push_back({"uniqueness.txt", rep.to_text()});
  out.artifacts.push_back({"contingency.csv", rep.contingency_csv()});
  out.artifacts.push_back(
      {"residual.vwf", encode_vwf(make_vwf(rep.grid, c.run.duration,
                                           {rep.residual, rep.floor, rep.peak, as_field(rep.support),
                                            as_field(rep.mismatch), as_field(rep.active), as_field(rep.detected)}))});
  if (c.output.slices) out.artifacts.push_back({"slices/residual.pgm", pgm_slice(rep.grid, rep.residual)});

  std::ostringstream os;
  bool ok = rep.pass();
  for (const auto& r : rep.regions) {
    const std::string want = r.region < static_cast<int>(u.expect.size()) ? u.expect[r.region] : "";
    bool good = want.empty() || r.verdict == want;
    if (r.verdict == "mismatch detected") good = good && r.contrast() >= u.min_contrast;
    ok = ok && good;
    os << "region_" << r.region << ": " << r.verdict << ", contrast " << fmt(r.contrast());
    if (!want.empty()) os << ", expected " << want;
    os << (good ? "" : " FAIL") << '\n';
  }
  os << "unidentifiable_nodes: " << rep.counts.mismatch_quiescent_clear + rep.counts.mismatch_quiescent_detected << '\n'
     << "false_detections: " << rep.counts.match_detected << '\n'
     << "result: " << (ok ? "pass" : "fail") << '\n';
  out.pass = ok;
  out.summary = os.str();
  out.artifacts.push_back({"summary.txt", out.summary});
  return out;
}

}  // namespace

CommandOutput run_command(const std::string& cmd, const RunConfig& c) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cmd) == names.end())
    throw std::invalid_argument("unknown command '" + cmd + "'");
  if (cmd != c.experiment)
    throw std::invalid_argument("config selects experiment '" + c.experiment + "', not '" + cmd + "'");
  CommandOutput out;
  if (cmd == "simulate")
    out = simulate(c);
  else if (cmd == "verify-fsp")
    out = verify_fsp_command(c);
  else if (cmd == "check-identities")
    out = check_identities(c);
  else if (cmd == "check-carleman")
    out = check_carleman(c);
  else if (cmd == "identify-speed")
    out = identify_speed(c);
  else
    out = uniqueness(c);
  out.artifacts.push_back({"config.json", serialize(c)});
  return out;
}

DispatchResult dispatch(const std::string& cmd, const RunConfig& c, const std::filesystem::path& out) {
  DispatchResult r;
  try {
    CommandOutput o = run_command(cmd, c);
    r.manifest = write_outputs(o.artifacts, out);
    r.exit_code = o.pass ? Pass : ScientificFailure;
    r.message = o.summary;
  } catch (const std::exception& e) {
    r.exit_code = OperationalError;
    r.message = std::string("error: ") + e.what() + "\n";
  }
  return r;
}

}  // namespace visco
