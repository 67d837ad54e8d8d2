#include "visco/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"
#include "visco/io.hpp"

namespace visco {

using json = nlohmann::ordered_json;

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = "invalid config";
  for (const auto& x : p) s += "\n  " + x;
  return s;
}

const char* face_key[6] = {"x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi"};

struct Problems {
  std::vector<std::string> list;
  void fail(const std::string& path, const std::string& msg) { list.push_back(path + ": " + msg); }
  void check(bool ok, const std::string& path, const std::string& msg) {
    if (!ok) fail(path, msg);
  }
};

// Typed access to one JSON object. Keys that are read are remembered, and
// finish() reports the rest as unknown.
class Obj {
public:
  Obj(Problems& p, const json* j, std::string path) : p_(p), j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) {
      p_.fail(path_.empty() ? "(root)" : path_, "expected an object");
      j_ = nullptr;
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const char* key) {
    known_.insert(key);
    return j_ && j_->contains(key);
  }
  const json* child(const char* key) { return has(key) ? &(*j_)[key] : nullptr; }
  bool required(const char* key) {
    if (has(key)) return true;
    p_.fail(at(key), "required");
    return false;
  }

  bool number(const char* key, double& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_number()) return type_error(key, "a number");
    out = v->get<double>();
    return true;
  }
  bool integer(const char* key, int& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_number_integer()) return type_error(key, "an integer");
    const auto x = v->get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
      p_.fail(at(key), "out of range");
      return false;
    }
    out = static_cast<int>(x);
    return true;
  }
  bool boolean(const char* key, bool& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_boolean()) return type_error(key, "true or false");
    out = v->get<bool>();
    return true;
  }
  bool text(const char* key, std::string& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_string()) return type_error(key, "a string");
    out = v->get<std::string>();
    return true;
  }
  /// One to three numbers; missing trailing components are zero.
  bool point(const char* key, std::array<double, 3>& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_array() || v->empty() || v->size() > 3) return type_error(key, "an array of 1 to 3 numbers");
    std::array<double, 3> r{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!(*v)[i].is_number()) return type_error(key, "an array of numbers");
      r[i] = (*v)[i].get<double>();
    }
    out = r;
    return true;
  }
  bool numbers(const char* key, std::vector<double>& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_array()) return type_error(key, "an array of numbers");
    std::vector<double> r;
    for (const auto& x : *v) {
      if (!x.is_number()) return type_error(key, "an array of numbers");
      r.push_back(x.get<double>());
    }
    out = r;
    return true;
  }
  bool integers(const char* key, std::vector<int>& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_array()) return type_error(key, "an array of integers");
    std::vector<int> r;
    for (const auto& x : *v) {
      if (!x.is_number_integer() || std::abs(x.get<long long>()) > std::numeric_limits<int>::max())
        return type_error(key, "an array of integers");
      r.push_back(static_cast<int>(x.get<long long>()));
    }
    out = r;
    return true;
  }
  bool strings(const char* key, std::vector<std::string>& out) {
    const json* v = child(key);
    if (!v) return false;
    if (!v->is_array()) return type_error(key, "an array of strings");
    std::vector<std::string> r;
    for (const auto& x : *v) {
      if (!x.is_string()) return type_error(key, "an array of strings");
      r.push_back(x.get<std::string>());
    }
    out = r;
    return true;
  }
  /// Array elements with their paths; empty (and reported) when not an array.
  std::vector<std::pair<const json*, std::string>> items(const char* key) {
    std::vector<std::pair<const json*, std::string>> r;
    const json* v = child(key);
    if (!v) return r;
    if (!v->is_array()) {
      type_error(key, "an array");
      return r;
    }
    for (std::size_t i = 0; i < v->size(); ++i) r.emplace_back(&(*v)[i], at(key) + "[" + std::to_string(i) + "]");
    return r;
  }

  void finish() {
    if (!j_) return;
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!known_.count(it.key())) p_.fail(at(it.key()), "unknown key");
  }

private:
  bool type_error(const char* key, const char* what) {
    p_.fail(at(key), std::string("expected ") + what);
    return false;
  }

  Problems& p_;
  const json* j_;
  std::string path_;
  std::set<std::string> known_;
};

void positive(Problems& p, double v, const std::string& path) { p.check(v > 0.0, path, "must be positive"); }
void nonnegative(Problems& p, double v, const std::string& path) { p.check(v >= 0.0, path, "must be >= 0"); }
void fraction(Problems& p, double v, const std::string& path) {
  p.check(v > 0.0 && v <= 1.0, path, "must lie in (0, 1]");
}

Grid parse_grid(Problems& p, const json* j) {
  Grid g;
  Obj o(p, j, "grid");
  o.integer("dim", g.dim);
  const bool dim_ok = g.dim == 2 || g.dim == 3;
  p.check(dim_ok, o.at("dim"), "must be 2 or 3");
  std::vector<int> cells;
  if (o.required("cells") && o.integers("cells", cells)) {
    if (dim_ok && static_cast<int>(cells.size()) != g.dim) {
      p.fail(o.at("cells"), "needs " + std::to_string(g.dim) + " entries");
    } else if (dim_ok) {
      double total = 1.0;
      for (int a = 0; a < g.dim; ++a) {
        const std::string at = o.at("cells") + "[" + std::to_string(a) + "]";
        p.check(cells[a] >= 8, at, "must be >= 8");
        p.check(cells[a] <= 100000, at, "must be <= 100000");
        g.cells[a] = cells[a];
        total *= cells[a] + 1.0;
      }
      g.cells[2] = g.dim == 3 ? g.cells[2] : 1;
      p.check(total <= 5e7, o.at("cells"), "more than 5e7 nodes");
    }
  }
  if (o.required("h") && o.number("h", g.h)) positive(p, g.h, o.at("h"));
  o.point("origin", g.origin);
  o.finish();
  return g;
}

std::vector<Region> parse_regions(Problems& p, Obj& o, const char* key, int dim);

std::optional<Material> parse_material(Problems& p, const json* j, const std::string& path, int dim,
                                       std::vector<Region>* regions = nullptr) {
  Obj o(p, j, path);
  if (regions) *regions = parse_regions(p, o, "regions", dim);
  double rho = 0.0;
  if (o.required("rho") && o.number("rho", rho)) positive(p, rho, o.at("rho"));
  std::vector<MaxwellUnit> units;
  const auto before = p.list.size();
  if (o.required("units")) {
    const auto items = o.items("units");
    if (items.empty() && o.child("units")->is_array()) p.fail(o.at("units"), "needs at least one unit");
    for (const auto& [uj, up] : items) {
      Obj u(p, uj, up);
      MaxwellUnit unit{{0.0, 0.0, dim}, std::nullopt};
      if (u.required("lambda")) u.number("lambda", unit.moduli.lambda);
      if (u.required("mu") && u.number("mu", unit.moduli.mu)) positive(p, unit.moduli.mu, u.at("mu"));
      if (unit.moduli.mu > 0.0)
        p.check(dim * unit.moduli.lambda + 2.0 * unit.moduli.mu > 0.0, u.at("lambda"),
                "dim * lambda + 2 mu must be positive");
      double eta = 0.0;
      if (u.number("viscosity", eta)) {
        positive(p, eta, u.at("viscosity"));
        unit.viscosity = eta;
      }
      u.finish();
      units.push_back(unit);
    }
  }
  std::string kind;
  const bool has_kind = o.text("kind", kind);
  o.finish();
  if (p.list.size() != before || units.empty() || !(rho > 0.0)) return std::nullopt;
  try {
    Material m(units, rho);
    if (has_kind && kind != to_string(m.kind()))
      p.fail(o.at("kind"), "is " + to_string(m.kind()) + " for these units, not " + kind);
    return m;
  } catch (const std::exception& e) {
    p.fail(path, e.what());
    return std::nullopt;
  }
}

Region parse_region(Problems& p, const json* j, const std::string& path, int dim) {
  Region r;
  Obj o(p, j, path);
  std::string shape = "ball";
  o.text("shape", shape);
  if (shape == "ball") {
    r.shape = Region::Shape::Ball;
    if (o.required("center")) o.point("center", r.center);
    if (o.required("radius") && o.number("radius", r.radius)) positive(p, r.radius, o.at("radius"));
  } else if (shape == "box") {
    r.shape = Region::Shape::Box;
    if (o.required("lo")) o.point("lo", r.lo);
    if (o.required("hi")) o.point("hi", r.hi);
    for (int a = 0; a < dim; ++a) p.check(r.lo[a] < r.hi[a], o.at("hi"), "must exceed lo on every axis");
  } else {
    p.fail(o.at("shape"), "must be \"ball\" or \"box\"");
  }
  const char* scales[] = {"lambda_scale", "mu_scale", "eta_scale", "rho_scale"};
  double* targets[] = {&r.lambda_scale, &r.mu_scale, &r.eta_scale, &r.rho_scale};
  for (int k = 0; k < 4; ++k)
    if (o.number(scales[k], *targets[k])) positive(p, *targets[k], o.at(scales[k]));
  if (o.number("blend", r.blend)) nonnegative(p, r.blend, o.at("blend"));
  o.finish();
  return r;
}

std::vector<Region> parse_regions(Problems& p, Obj& o, const char* key, int dim) {
  std::vector<Region> r;
  for (const auto& [rj, rp] : o.items(key)) r.push_back(parse_region(p, rj, rp, dim));
  return r;
}

int face_from_key(const std::string& s) {
  for (int f = 0; f < 6; ++f)
    if (s == face_key[f]) return f;
  return -1;
}

BoundarySpec parse_boundary(Problems& p, const json* j, int dim) {
  BoundarySpec b;
  Obj o(p, j, "boundary");
  for (int f = 0; f < 6; ++f) {
    std::string kind;
    if (!o.text(face_key[f], kind)) continue;
    if (f >= 2 * dim)
      p.fail(o.at(face_key[f]), "not a face of a " + std::to_string(dim) + "D grid");
    else if (kind == "dirichlet")
      b.faces[f] = BoundaryKind::Dirichlet;
    else if (kind == "traction_free")
      b.faces[f] = BoundaryKind::TractionFree;
    else
      p.fail(o.at(face_key[f]), "must be \"dirichlet\" or \"traction_free\"");
  }
  o.finish();
  return b;
}

SourceSpec parse_source(Problems& p, const json* j, int dim) {
  SourceSpec s;
  if (!j) return s;
  Obj o(p, j, "source");
  s.enabled = true;
  o.boolean("enabled", s.enabled);
  std::string face = face_key[s.face];
  if (o.text("face", face)) {
    s.face = face_from_key(face);
    if (s.face < 0 || s.face >= 2 * dim) {
      p.fail(o.at("face"), "not a face of a " + std::to_string(dim) + "D grid");
      s.face = 0;
    }
  }
  if (o.number("frequency", s.frequency)) positive(p, s.frequency, o.at("frequency"));
  o.number("amplitude", s.amplitude);
  if (o.number("ramp", s.ramp)) nonnegative(p, s.ramp, o.at("ramp"));
  if (o.number("duration", s.duration)) positive(p, s.duration, o.at("duration"));
  p.check(2.0 * s.ramp <= s.duration, o.at("ramp"), "must not exceed half the duration");
  if (o.point("polarization", s.polarization))
    p.check(std::hypot(s.polarization[0], s.polarization[1], s.polarization[2]) > 0.0, o.at("polarization"),
            "must be nonzero");
  o.point("center", s.center);
  if (o.number("half_width", s.half_width)) positive(p, s.half_width, o.at("half_width"));
  o.finish();
  return s;
}

SolverOptions parse_solver(Problems& p, const json* j) {
  SolverOptions s;
  Obj o(p, j, "solver");
  if (o.integer("order", s.order)) p.check(s.order == 2 || s.order == 4, o.at("order"), "must be 2 or 4");
  if (o.number("cfl", s.cfl)) fraction(p, s.cfl, o.at("cfl"));
  std::string mem;
  if (o.text("memory", mem)) {
    if (mem == "exponential")
      s.memory = MemoryScheme::Exponential;
    else if (mem == "trapezoidal")
      s.memory = MemoryScheme::Trapezoidal;
    else
      p.fail(o.at("memory"), "must be \"exponential\" or \"trapezoidal\"");
  }
  o.boolean("frozen_dashpots", s.frozen_dashpots);
  o.finish();
  return s;
}

SnapshotSchedule parse_snapshots(Problems& p, const json* j) {
  SnapshotSchedule s;
  Obj o(p, j, "snapshots");
  if (o.numbers("times", s.times))
    for (std::size_t i = 0; i < s.times.size(); ++i)
      nonnegative(p, s.times[i], o.at("times") + "[" + std::to_string(i) + "]");
  if (o.number("interval", s.interval)) nonnegative(p, s.interval, o.at("interval"));
  if (o.integer("every_steps", s.every_steps)) p.check(s.every_steps >= 0, o.at("every_steps"), "must be >= 0");
  o.boolean("include_final", s.include_final);
  o.finish();
  return s;
}

void parse_fsp(Problems& p, const json* j, FspParams& f) {
  Obj o(p, j, "fsp");
  o.point("center", f.cone.center);
  if (o.number("radius", f.cone.radius)) nonnegative(p, f.cone.radius, o.at("radius"));
  if (o.number("speed", f.cone.speed)) nonnegative(p, f.cone.speed, o.at("speed"));
  if (o.number("speed_scale", f.speed_scale)) positive(p, f.speed_scale, o.at("speed_scale"));
  if (o.number("field_tol", f.tol.field)) positive(p, f.tol.field, o.at("field_tol"));
  if (o.number("rel_tol", f.tol.rel)) nonnegative(p, f.tol.rel, o.at("rel_tol"));
  if (o.number("abs_tol", f.tol.abs)) nonnegative(p, f.tol.abs, o.at("abs_tol"));
  if (o.number("control_scale", f.control_scale)) nonnegative(p, f.control_scale, o.at("control_scale"));
  if (o.integers("refinement", f.refinement)) {
    for (std::size_t i = 0; i < f.refinement.size(); ++i)
      p.check(f.refinement[i] >= 8, o.at("refinement") + "[" + std::to_string(i) + "]", "must be >= 8");
    p.check(std::is_sorted(f.refinement.begin(), f.refinement.end()), o.at("refinement"), "must be increasing");
  }
  o.number("min_order", f.min_order);
  o.finish();
}

void parse_identities(Problems& p, const json* j, IdentityParams& id) {
  Obj o(p, j, "identities");
  if (o.integer("cases", id.cases)) p.check(id.cases >= 1, o.at("cases"), "must be >= 1");
  if (o.integer("coefficient_degree", id.coefficient_degree))
    p.check(id.coefficient_degree >= 0 && id.coefficient_degree <= 4, o.at("coefficient_degree"),
            "must lie in [0, 4]");
  if (o.integer("float_cases", id.float_cases)) p.check(id.float_cases >= 0, o.at("float_cases"), "must be >= 0");
  if (o.integer("float_points", id.float_points))
    p.check(id.float_points >= 1, o.at("float_points"), "must be >= 1");
  if (o.number("float_tol", id.float_tol)) positive(p, id.float_tol, o.at("float_tol"));
  o.finish();
}

void parse_carleman(Problems& p, const json* j, CarlemanParams& c) {
  Obj o(p, j, "carleman");
  o.point("x0", c.x0);
  if (o.number("r0", c.r0))
    p.check(c.r0 > 0.0 && c.r0 < std::exp(-1.0), o.at("r0"), "must lie in (0, 1/e)");
  const auto items = o.items("bumps");
  if (o.child("bumps")) c.bumps.clear();
  for (const auto& [tj, tp] : items) {
    TestFunction t;
    if (!tj->is_array() || tj->empty()) {
      p.fail(tp, "expected a non-empty array of factors");
      continue;
    }
    for (std::size_t k = 0; k < tj->size(); ++k) {
      Obj f(p, &(*tj)[k], tp + "[" + std::to_string(k) + "]");
      Bump b;
      if (f.required("center")) f.point("center", b.center);
      if (f.required("radius") && f.number("radius", b.radius)) positive(p, b.radius, f.at("radius"));
      f.finish();
      t.factors.push_back(b);
    }
    c.bumps.push_back(t);
  }
  if (o.number("scan_lo", c.scan_lo)) positive(p, c.scan_lo, o.at("scan_lo"));
  if (o.number("scan_hi", c.scan_hi)) p.check(c.scan_hi > c.scan_lo, o.at("scan_hi"), "must exceed scan_lo");
  if (o.integer("scan_points", c.scan_points)) p.check(c.scan_points >= 3, o.at("scan_points"), "must be >= 3");
  if (o.number("span", c.span)) p.check(c.span > 1.0, o.at("span"), "must exceed 1");
  if (o.integer("probe_points", c.probe_points)) p.check(c.probe_points >= 2, o.at("probe_points"), "must be >= 2");
  o.integers("memory_bumps", c.memory_bumps);
  p.check(!c.memory_bumps.empty(), o.at("memory_bumps"), "must not be empty");
  const std::size_t n_bumps = c.bumps.empty() ? 5 : c.bumps.size();
  for (std::size_t i = 0; i < c.memory_bumps.size(); ++i)
    p.check(c.memory_bumps[i] >= 0 && static_cast<std::size_t>(c.memory_bumps[i]) < n_bumps,
            o.at("memory_bumps") + "[" + std::to_string(i) + "]", "not an index into bumps");
  auto positives = [&](const char* key, std::vector<double>& v) {
    o.numbers(key, v);
    p.check(!v.empty(), o.at(key), "must not be empty");
    for (std::size_t i = 0; i < v.size(); ++i) positive(p, v[i], o.at(key) + "[" + std::to_string(i) + "]");
  };
  positives("gram_betas", c.gram_betas);
  positives("b0", c.b0);
  positives("b1", c.b1);
  positives("t_fractions", c.t_fractions);
  for (std::size_t i = 0; i < c.t_fractions.size(); ++i)
    p.check(c.t_fractions[i] <= 1.0, o.at("t_fractions") + "[" + std::to_string(i) + "]", "must be <= 1");
  if (o.integer("azimuth_nodes", c.quadrature.azimuth_nodes))
    p.check(c.quadrature.azimuth_nodes >= 4, o.at("azimuth_nodes"), "must be >= 4");
  if (o.number("grading", c.quadrature.grading))
    p.check(c.quadrature.grading > 0.0 && c.quadrature.grading < 1.0, o.at("grading"), "must lie in (0, 1)");
  o.finish();
}

void parse_speed(Problems& p, const json* j, SpeedParams& s) {
  Obj o(p, j, "speed");
  std::string name;
  if (o.text("method", name)) {
    try {
      s.options.method = speed_method_from_string(name);
    } catch (const std::invalid_argument&) {
      p.fail(o.at("method"), "must be \"time_of_flight\" or \"phase_gradient\"");
    }
  }
  if (o.text("signal", name)) {
    try {
      s.options.signal = speed_signal_from_string(name);
    } catch (const std::invalid_argument&) {
      p.fail(o.at("signal"), "must be \"curl\" or \"displacement\"");
    }
  }
  if (o.number("frequency", s.options.frequency)) nonnegative(p, s.options.frequency, o.at("frequency"));
  if (o.number("baseline", s.options.baseline)) nonnegative(p, s.options.baseline, o.at("baseline"));
  if (o.number("max_lag", s.options.max_lag)) nonnegative(p, s.options.max_lag, o.at("max_lag"));
  if (o.number("gate", s.options.gate)) nonnegative(p, s.options.gate, o.at("gate"));
  if (o.number("amplitude_floor", s.options.amplitude_floor))
    p.check(s.options.amplitude_floor >= 0.0 && s.options.amplitude_floor < 1.0, o.at("amplitude_floor"),
            "must lie in [0, 1)");
  if (o.text("check", s.check))
    p.check(s.check == "homogeneous" || s.check == "ratio" || s.check == "none", o.at("check"),
            "must be \"homogeneous\", \"ratio\" or \"none\"");
  if (o.number("rel", s.rel)) positive(p, s.rel, o.at("rel"));
  if (o.number("fraction", s.fraction)) fraction(p, s.fraction, o.at("fraction"));
  if (o.number("inner", s.inner)) positive(p, s.inner, o.at("inner"));
  if (o.number("outer", s.outer)) p.check(s.outer >= s.inner, o.at("outer"), "must be >= inner");
  if (o.number("ratio_rel", s.ratio_rel)) positive(p, s.ratio_rel, o.at("ratio_rel"));
  o.finish();
}

void parse_uniqueness(Problems& p, const json* j, UniquenessParams& u, int dim) {
  Obj o(p, j, "uniqueness");
  if (const json* m = o.child("material")) u.b_base = parse_material(p, m, o.at("material"), dim);
  u.b_regions = parse_regions(p, o, "regions", dim);
  auto& d = u.options;
  if (o.integer("every_steps", d.every_steps)) p.check(d.every_steps >= 1, o.at("every_steps"), "must be >= 1");
  if (o.number("active_fraction", d.active_fraction)) fraction(p, d.active_fraction, o.at("active_fraction"));
  if (o.number("significance", d.significance)) positive(p, d.significance, o.at("significance"));
  if (o.number("floor_clamp", d.floor_clamp)) nonnegative(p, d.floor_clamp, o.at("floor_clamp"));
  if (o.number("quiet_fraction", d.quiet_fraction)) fraction(p, d.quiet_fraction, o.at("quiet_fraction"));
  if (o.number("max_floor_ratio", d.max_floor_ratio)) positive(p, d.max_floor_ratio, o.at("max_floor_ratio"));
  if (o.number("detect_fraction", d.detect_fraction)) fraction(p, d.detect_fraction, o.at("detect_fraction"));
  if (o.number("min_contrast", u.min_contrast)) nonnegative(p, u.min_contrast, o.at("min_contrast"));
  if (o.strings("expect", u.expect)) {
    static const std::set<std::string> verdicts{"", "match", "mismatch detected", "missed", "unidentifiable",
                                                "inconclusive"};
    for (std::size_t i = 0; i < u.expect.size(); ++i)
      p.check(verdicts.count(u.expect[i]) > 0, o.at("expect") + "[" + std::to_string(i) + "]",
              "not a verdict");
    p.check(u.expect.size() <= u.b_regions.size(), o.at("expect"), "has more entries than regions");
  }
  o.finish();
}

void cross_checks(Problems& p, const RunConfig& c) {
  const RunSpec& r = c.run;
  try {
    r.boundary.validate(r.grid.dim, r.source);
  } catch (const std::invalid_argument& e) {
    p.fail("boundary", e.what());
  }
  const std::string& x = c.experiment;
  if (x == "verify-fsp") {
    try {
      Cone cone = c.fsp.cone;
      if (cone.speed == 0.0) cone.speed = 1.0;
      cone.validate(r.grid);
    } catch (const std::invalid_argument& e) {
      p.fail("fsp", e.what());
    }
    if (!c.fsp.refinement.empty()) p.check(c.fsp.refinement.size() >= 2, "fsp.refinement", "needs at least two levels");
  }
  if (x == "identify-speed") {
    p.check(r.source.enabled, "source", "identify-speed needs a drive");
    p.check(r.snapshots.every_steps > 0, "snapshots.every_steps", "identify-speed needs evenly spaced snapshots");
    if (c.speed.check == "ratio")
      p.check(!r.regions.empty() && r.regions[0].shape == Region::Shape::Ball, "material.regions",
              "the ratio check needs a ball as the first region");
  }
  if (x == "uniqueness-exp") {
    p.check(!c.uniqueness.b_regions.empty() || c.uniqueness.b_base.has_value(), "uniqueness",
            "material B equals material A");
    if (c.uniqueness.b_base && c.uniqueness.b_base->n_units() != r.material.n_units())
      p.fail("uniqueness.material.units", "needs as many units as material.units");
  }
}

json point_json(const std::array<double, 3>& x, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(x[i]);
  return a;
}

json material_json(const Material& m, const std::vector<Region>* regions, int dim);

json region_json(const Region& r, int dim) {
  json o;
  if (r.shape == Region::Shape::Ball) {
    o["shape"] = "ball";
    o["center"] = point_json(r.center, dim);
    o["radius"] = r.radius;
  } else {
    o["shape"] = "box";
    o["lo"] = point_json(r.lo, dim);
    o["hi"] = point_json(r.hi, dim);
  }
  o["lambda_scale"] = r.lambda_scale;
  o["mu_scale"] = r.mu_scale;
  o["eta_scale"] = r.eta_scale;
  o["rho_scale"] = r.rho_scale;
  o["blend"] = r.blend;
  return o;
}

json material_json(const Material& m, const std::vector<Region>* regions, int dim) {
  json o;
  o["kind"] = to_string(m.kind());
  o["rho"] = m.rho();
  json units = json::array();
  for (const auto& u : m.units()) {
    json x;
    x["lambda"] = u.moduli.lambda;
    x["mu"] = u.moduli.mu;
    if (u.viscosity) x["viscosity"] = *u.viscosity;
    units.push_back(x);
  }
  o["units"] = units;
  if (regions) {
    json rs = json::array();
    for (const auto& r : *regions) rs.push_back(region_json(r, dim));
    o["regions"] = rs;
  }
  return o;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_problems(problems)), problems_(std::move(problems)) {}

std::vector<TestFunction> default_bumps() {
  return {TestFunction{{{{0.15, 0.0, 0.0}, 0.1}}},
          TestFunction{{{{0.0, 0.12, 0.05}, 0.08}}},
          TestFunction{{{{0.1, 0.1, 0.1}, 0.06}}},
          TestFunction{{{{0.15, 0.0, 0.0}, 0.1}, {{0.1, 0.02, 0.0}, 0.08}}},
          TestFunction{{{{0.0, 0.0, -0.2}, 0.07}}}};
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character.
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string why = e.what();
    if (const auto k = why.find(": "); k != std::string::npos) why = why.substr(k + 2);
    if (why.rfind("syntax error while parsing value - ", 0) == 0) why = why.substr(35);
    throw ConfigError({"line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + why});
  } catch (const json::exception& e) {
    throw ConfigError({e.what()});
  }

  Problems p;
  RunConfig c;
  Obj root(p, &doc, "");
  if (root.required("experiment") && root.text("experiment", c.experiment)) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
      std::string list;
      for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
      p.fail("experiment", "must be one of " + list);
    }
  }
  if (const json* s = root.child("seed")) {
    if (s->is_number_unsigned())
      c.seed = s->get<std::uint64_t>();
    else
      p.fail("seed", "expected a non-negative integer");
  }
  if (root.number("tolerance_scale", c.tolerance_scale)) positive(p, c.tolerance_scale, "tolerance_scale");

  // The identity and Carleman checks do not simulate; for them the run keys are optional.
  const bool needs_run = c.experiment != "check-identities" && c.experiment != "check-carleman";
  auto wanted = [&](const char* key) { return needs_run ? root.required(key) : root.has(key); };
  RunSpec& r = c.run;
  if (wanted("grid")) r.grid = parse_grid(p, root.child("grid"));
  const int dim = (r.grid.dim == 3) ? 3 : 2;
  if (wanted("material")) {
    if (auto m = parse_material(p, root.child("material"), "material", dim, &r.regions)) r.material = *m;
  }
  r.boundary = parse_boundary(p, root.child("boundary"), dim);
  r.source = parse_source(p, root.child("source"), dim);
  r.options = parse_solver(p, root.child("solver"));
  if (wanted("duration") && root.number("duration", r.duration)) {
    if (needs_run)
      positive(p, r.duration, "duration");
    else
      nonnegative(p, r.duration, "duration");
  }
  r.snapshots = parse_snapshots(p, root.child("snapshots"));

  {
    Obj o(p, root.child("output"), "output");
    o.text("dir", c.output.dir);
    p.check(!c.output.dir.empty(), "output.dir", "must not be empty");
    o.boolean("snapshots", c.output.snapshots);
    o.boolean("slices", c.output.slices);
    o.finish();
  }
  {
    Obj o(p, root.child("energy"), "energy");
    o.boolean("enabled", c.energy.enabled);
    if (o.number("rel_slack", c.energy.rel_slack)) nonnegative(p, c.energy.rel_slack, "energy.rel_slack");
    o.finish();
  }
  parse_fsp(p, root.child("fsp"), c.fsp);
  parse_identities(p, root.child("identities"), c.identities);
  parse_carleman(p, root.child("carleman"), c.carleman);
  parse_speed(p, root.child("speed"), c.speed);
  parse_uniqueness(p, root.child("uniqueness"), c.uniqueness, dim);
  root.finish();

  if (p.list.empty()) cross_checks(p, c);
  if (!p.list.empty()) throw ConfigError(p.list);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

std::string serialize(const RunConfig& c) {
  const RunSpec& r = c.run;
  const int dim = r.grid.dim;
  json o;
  o["experiment"] = c.experiment;
  o["seed"] = c.seed;
  o["tolerance_scale"] = c.tolerance_scale;

  json g;
  g["dim"] = dim;
  g["cells"] = json::array();
  for (int a = 0; a < dim; ++a) g["cells"].push_back(r.grid.cells[a]);
  g["h"] = r.grid.h;
  g["origin"] = point_json(r.grid.origin, dim);
  o["grid"] = g;
  o["material"] = material_json(r.material, &r.regions, dim);

  json b;
  for (int f = 0; f < 2 * dim; ++f)
    b[face_key[f]] = r.boundary.faces[f] == BoundaryKind::Dirichlet ? "dirichlet" : "traction_free";
  o["boundary"] = b;

  const SourceSpec& s = r.source;
  json src;
  src["enabled"] = s.enabled;
  src["face"] = face_key[s.face];
  src["frequency"] = s.frequency;
  src["amplitude"] = s.amplitude;
  src["ramp"] = s.ramp;
  src["duration"] = s.duration;
  src["polarization"] = point_json(s.polarization, 3);
  src["center"] = point_json(s.center, 3);
  src["half_width"] = s.half_width;
  o["source"] = src;

  json so;
  so["order"] = r.options.order;
  so["cfl"] = r.options.cfl;
  so["memory"] = r.options.memory == MemoryScheme::Exponential ? "exponential" : "trapezoidal";
  so["frozen_dashpots"] = r.options.frozen_dashpots;
  o["solver"] = so;
  o["duration"] = r.duration;

  json sn;
  sn["times"] = r.snapshots.times;
  sn["interval"] = r.snapshots.interval;
  sn["every_steps"] = r.snapshots.every_steps;
  sn["include_final"] = r.snapshots.include_final;
  o["snapshots"] = sn;

  o["output"] = {{"dir", c.output.dir}, {"snapshots", c.output.snapshots}, {"slices", c.output.slices}};
  o["energy"] = {{"enabled", c.energy.enabled}, {"rel_slack", c.energy.rel_slack}};

  const FspParams& f = c.fsp;
  json fj;
  fj["center"] = point_json(f.cone.center, 3);
  fj["radius"] = f.cone.radius;
  fj["speed"] = f.cone.speed;
  fj["speed_scale"] = f.speed_scale;
  fj["field_tol"] = f.tol.field;
  fj["rel_tol"] = f.tol.rel;
  fj["abs_tol"] = f.tol.abs;
  fj["control_scale"] = f.control_scale;
  fj["refinement"] = f.refinement;
  fj["min_order"] = f.min_order;
  o["fsp"] = fj;

  const IdentityParams& id = c.identities;
  o["identities"] = {{"cases", id.cases},
                     {"coefficient_degree", id.coefficient_degree},
                     {"float_cases", id.float_cases},
                     {"float_points", id.float_points},
                     {"float_tol", id.float_tol}};

  const CarlemanParams& k = c.carleman;
  json kj;
  kj["x0"] = point_json(k.x0, 3);
  kj["r0"] = k.r0;
  kj["bumps"] = json::array();
  for (const auto& t : k.bumps) {
    json factors = json::array();
    for (const auto& bump : t.factors)
      factors.push_back({{"center", point_json(bump.center, 3)}, {"radius", bump.radius}});
    kj["bumps"].push_back(factors);
  }
  kj["scan_lo"] = k.scan_lo;
  kj["scan_hi"] = k.scan_hi;
  kj["scan_points"] = k.scan_points;
  kj["span"] = k.span;
  kj["probe_points"] = k.probe_points;
  kj["memory_bumps"] = k.memory_bumps;
  kj["gram_betas"] = k.gram_betas;
  kj["b0"] = k.b0;
  kj["b1"] = k.b1;
  kj["t_fractions"] = k.t_fractions;
  kj["azimuth_nodes"] = k.quadrature.azimuth_nodes;
  kj["grading"] = k.quadrature.grading;
  o["carleman"] = kj;

  const SpeedParams& sp = c.speed;
  json spj;
  spj["method"] = to_string(sp.options.method);
  spj["signal"] = to_string(sp.options.signal);
  spj["frequency"] = sp.options.frequency;
  spj["baseline"] = sp.options.baseline;
  spj["max_lag"] = sp.options.max_lag;
  spj["gate"] = sp.options.gate;
  spj["amplitude_floor"] = sp.options.amplitude_floor;
  spj["check"] = sp.check;
  spj["rel"] = sp.rel;
  spj["fraction"] = sp.fraction;
  spj["inner"] = sp.inner;
  spj["outer"] = sp.outer;
  spj["ratio_rel"] = sp.ratio_rel;
  o["speed"] = spj;

  const UniquenessParams& u = c.uniqueness;
  json uj;
  if (u.b_base) uj["material"] = material_json(*u.b_base, nullptr, dim);
  uj["regions"] = json::array();
  for (const auto& reg : u.b_regions) uj["regions"].push_back(region_json(reg, dim));
  uj["every_steps"] = u.options.every_steps;
  uj["active_fraction"] = u.options.active_fraction;
  uj["significance"] = u.options.significance;
  uj["floor_clamp"] = u.options.floor_clamp;
  uj["quiet_fraction"] = u.options.quiet_fraction;
  uj["max_floor_ratio"] = u.options.max_floor_ratio;
  uj["detect_fraction"] = u.options.detect_fraction;
  uj["min_contrast"] = u.min_contrast;
  uj["expect"] = u.expect;
  o["uniqueness"] = uj;

  return o.dump(2) + "\n";
}

}  // namespace visco
