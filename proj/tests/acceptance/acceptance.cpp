// End-to-end acceptance run: one line per criterion with the measured numbers,
// the wall time and its limit. Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "histories.hpp"
#include "oracles.hpp"
#include "visco/commands.hpp"
#include "visco/config.hpp"
#include "visco/constitutive.hpp"
#include "visco/tensor.hpp"

using namespace visco;
namespace fs = std::filesystem;

namespace {

const fs::path configs = VISCO_CONFIG_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// The value of "key: value" in a command summary, or "" when absent.
std::string field(const std::string& text, const std::string& key) {
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);)
    if (line.rfind(key + ": ", 0) == 0) return line.substr(key.size() + 2);
  return "";
}

MaxwellUnit random_unit(std::mt19937_64& rng, int dim, bool viscous) {
  std::uniform_real_distribution<double> u(0.1, 5.0);
  const double mu = u(rng);
  // lambda may be negative as long as d lambda + 2 mu stays positive.
  const double lambda = std::uniform_real_distribution<double>(-1.8 * mu / dim, 5.0)(rng);
  return {{lambda, mu, dim}, viscous ? std::optional<double>(u(rng)) : std::nullopt};
}

Outcome constitutive_equivalence() {
  std::mt19937_64 rng(2024);
  double worst = INFINITY;
  int histories = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const int dim = trial % 3 == 2 ? 2 : 3;
    std::vector<MaxwellUnit> units{random_unit(rng, dim, true), random_unit(rng, dim, true)};
    if (trial % 2) units.push_back(random_unit(rng, dim, false));
    const Material m(units, 1.0);
    const auto h = oracle::random_history(rng, dim);
    std::vector<double> errs;
    for (double dt : {0.04, 0.02, 0.01, 0.005}) errs.push_back(oracle::form_mismatch(m, h, 1.0, dt));
    for (double o : oracle::observed_orders(errs)) worst = std::min(worst, o);
    ++histories;
  }
  return {worst >= 1.9, std::to_string(histories) + " histories, 4 dt levels, min observed order " + fmt(worst) +
                            " (need >= 1.9)"};
}

Outcome instantaneous_modulus() {
  std::mt19937_64 rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 2 + trial % 2;
    std::vector<MaxwellUnit> units;
    for (int j = 0; j < 1 + trial % 4; ++j) units.push_back(random_unit(rng, dim, j == 0 || trial % 3 != 0));
    const Material m(units, 1.0);
    const RelaxationKernel k = relaxation_kernel(m);
    double kv = 0.0, kd = 0.0;
    for (const auto& u : m.units()) {
      kv += u.moduli.bulk_eigenvalue();
      kd += u.moduli.shear_eigenvalue();
    }
    worst = std::max({worst, std::abs(k.g_vol(0.0) - kv) / std::abs(kv), std::abs(k.g_dev(0.0) - kd) / kd});
    // The full tensor: G(0) e against sum_j C_j e on a random strain.
    SymTensor e(dim);
    std::normal_distribution<double> n;
    for (int i = 0; i < sym_size(dim); ++i) e[i] = n(rng);
    SymTensor ce(dim);
    for (const auto& u : m.units()) ce += apply_isotropic(u.moduli, e);
    worst = std::max(worst, std::sqrt(frobenius_norm2(k.apply(0.0, e) - ce) / frobenius_norm2(ce)));
  }
  return {worst <= 1e-12, "20 materials, max relative error " + fmt(worst) + " (need <= 1e-12)"};
}

Outcome operator_norm_check() {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 2 + trial % 2;
    const IsotropicModuli c = random_unit(rng, dim, false).moduli;
    const double brute =
        oracle::brute_force_rayleigh(oracle::isotropic_dense(c.lambda, c.mu, dim), dim, +1, 1000 + trial, 20000, 20000);
    const double closed = std::max(dim * c.lambda + 2.0 * c.mu, 2.0 * c.mu);
    worst = std::max({worst, std::abs(brute - closed) / closed, std::abs(operator_norm(c) - closed) / closed});
  }
  return {worst <= 1e-6, "20 moduli, max relative gap to the sampled supremum " + fmt(worst) + " (need <= 1e-6)"};
}

Outcome global_dissipation() {
  const RunConfig c = load_config(configs / "energy_2d.json");
  const bool setup = c.run.grid.cells[0] == 200 && c.run.grid.cells[1] == 200 && c.run.material.n_viscous() > 0 &&
                     c.energy.enabled && c.energy.rel_slack == 1e-8;
  const CommandOutput o = run_command("simulate", c);
  return {setup && o.pass, "200x200 " + to_string(c.run.material.kind()) + ", " +
                               field(o.summary, "energy_steps_checked") + " post-drive steps, max relative rise " +
                               field(o.summary, "energy_max_relative_rise") + " (allowed 1e-8)"};
}

Outcome finite_speed() {
  const RunConfig c = load_config(configs / "fsp_demo_2d.json");
  const bool setup = c.fsp.control_scale == 0.25 && c.fsp.refinement == std::vector<int>{50, 100, 200} &&
                     c.fsp.tol.field == 1e-3 && c.fsp.tol.rel == 1e-6 && c.fsp.cone.speed == 0.0;
  const CommandOutput o = run_command("verify-fsp", c);
  std::string orders;
  for (const auto& a : o.artifacts)
    if (a.name == "refinement.csv") {
      std::istringstream is(a.bytes);
      std::string line;
      std::getline(is, line);
      while (std::getline(is, line))
        if (line.back() != ',') orders += (orders.empty() ? "" : ", ") + fmt(std::stod(line.substr(line.rfind(',') + 1)));
    }
  return {setup && o.pass, "amplitude ratio " + field(o.summary, "amplitude_ratio") + ", cone energy ratio " +
                               field(o.summary, "max_cone_ratio") + ", alpha/4 control " + field(o.summary, "control") +
                               ", leakage orders " + orders};
}

Outcome identities() {
  const RunConfig c = load_config(configs / "identities.json");
  const bool setup = c.identities.cases >= 20 && c.identities.float_points == 100 && c.identities.float_tol == 1e-10;
  const CommandOutput o = run_command("check-identities", c);
  return {setup && o.pass, field(o.summary, "exact_cases") + " exact cases, " + field(o.summary, "exact_failures") +
                               " nonzero; float residual " + field(o.summary, "float_max_residual") +
                               " at 100 points (need <= 1e-10)"};
}

Outcome carleman() {
  const RunConfig c = load_config(configs / "carleman.json");
  const bool setup = (c.carleman.bumps.empty() || c.carleman.bumps.size() == 5) && c.carleman.span == 10.0;
  const CommandOutput o = run_command("check-carleman", c);
  std::string a;
  for (int k = 0; k < 5; ++k) {
    const std::string line = field(o.summary, "bump_" + std::to_string(k));
    a += (k ? "/" : "") + fmt(std::stod(line.substr(line.find("empirical_a ") + 12)));
  }
  return {setup && o.pass, "beta0 " + field(o.summary, "beta0") + ", ratio non-growing on [beta0, 10 beta0] for 5 bumps, empirical a " +
                               a + "; memory estimates hold on " + field(o.summary, "memory_configurations") +
                               " configurations, violations " + field(o.summary, "memory_violations")};
}

Outcome speed() {
  const RunConfig homog = load_config(configs / "homog_shear_2d.json");
  const RunConfig lesion = load_config(configs / "lesion_2d.json");
  const bool setup = homog.speed.rel == 0.1 && homog.speed.fraction == 0.9 && homog.speed.check == "homogeneous" &&
                     lesion.speed.check == "ratio" && lesion.speed.ratio_rel == 0.15;
  const CommandOutput h = run_command("identify-speed", homog);
  const CommandOutput l = run_command("identify-speed", lesion);
  return {setup && h.pass && l.pass, "homogeneous: " + field(h.summary, "fraction_within_0.1") +
                                         " of masked nodes within 10% (need >= 0.9); two-region ratio " +
                                         field(l.summary, "ratio") + " vs " + field(l.summary, "expected_ratio") +
                                         " (need within 15%)"};
}

Outcome uniqueness() {
  const RunConfig c = load_config(configs / "uniqueness_2d.json");
  const auto& r = c.uniqueness.b_regions;
  const bool setup = r.size() == 2 && r[0].mu_scale == 1.2 && r[1].mu_scale == 1.2 && c.uniqueness.min_contrast == 10.0 &&
                     c.uniqueness.expect == std::vector<std::string>{"mismatch detected", "unidentifiable"};
  const CommandOutput o = run_command("uniqueness-exp", c);
  return {setup && o.pass, "traversed region: " + field(o.summary, "region_0") + "; never-reached region: " +
                               field(o.summary, "region_1") + "; false detections " +
                               field(o.summary, "false_detections")};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("visco_acceptance_" + std::to_string(::getpid()));
  bool same = true;
  std::size_t entries = 0;
  for (const char* name : {"energy_2d", "identities"}) {
    const RunConfig c = load_config(configs / (std::string(name) + ".json"));
    std::string m[2];
    for (int k = 0; k < 2; ++k) {
      const fs::path dir = root / (std::string(name) + "_" + std::to_string(k));
      const DispatchResult r = dispatch(c.experiment, c, dir);
      m[k] = r.exit_code == OperationalError ? "" : read_file(dir / manifest_name);
      entries += k ? 0 : r.manifest.entries.size();
    }
    same = same && !m[0].empty() && m[0] == m[1];
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  return {same, "two runs each of energy_2d and identities, " + std::to_string(entries) +
                    " artifacts, manifests " + (same ? "bit-identical" : "differ")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"constitutive equivalence", 10.0, constitutive_equivalence},
      {"instantaneous modulus", 1.0, instantaneous_modulus},
      {"operator norm closed form", 10.0, operator_norm_check},
      {"global dissipation", 60.0, global_dissipation},
      {"finite speed of propagation", 300.0, finite_speed},
      {"reformulation identities", 30.0, identities},
      {"Carleman probes", 120.0, carleman},
      {"speed identification", 300.0, speed},
      {"uniqueness discrimination", 300.0, uniqueness},
      {"determinism", 120.0, determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < criteria[i].limit;
    failed += !pass;
    std::printf("%-4s C%-2zu %-28s %s [%.1f s, limit %.0f s]\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.c_str(), secs, criteria[i].limit);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
