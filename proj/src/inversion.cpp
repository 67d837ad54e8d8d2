#include "visco/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include "visco/tensor.hpp"

namespace visco {

std::string to_string(SpeedMethod m) { return m == SpeedMethod::TimeOfFlight ? "time_of_flight" : "phase_gradient"; }

SpeedMethod speed_method_from_string(const std::string& s) {
  if (s == "time_of_flight") return SpeedMethod::TimeOfFlight;
  if (s == "phase_gradient") return SpeedMethod::PhaseGradient;
  throw std::invalid_argument("unknown speed method '" + s + "' (time_of_flight, phase_gradient)");
}

std::string to_string(SpeedSignal s) { return s == SpeedSignal::Curl ? "curl" : "displacement"; }

SpeedSignal speed_signal_from_string(const std::string& s) {
  if (s == "curl") return SpeedSignal::Curl;
  if (s == "displacement") return SpeedSignal::Displacement;
  throw std::invalid_argument("unknown speed signal '" + s + "' (curl, displacement)");
}

void set_footprint(SpeedOptions& opt, const SourceSpec& src, const Grid& g) {
  const int axis = src.face / 2;
  for (int a = 0; a < 3; ++a) {
    if (a >= g.dim) {
      opt.footprint_lo[a] = opt.footprint_hi[a] = 0.0;
    } else if (a == axis) {
      opt.footprint_lo[a] = opt.footprint_hi[a] = g.origin[a] + (src.face % 2 ? g.extent(a) : 0.0);
    } else {
      opt.footprint_lo[a] = std::max(g.origin[a], src.center[a] - src.half_width);
      opt.footprint_hi[a] = std::min(g.origin[a] + g.extent(a), src.center[a] + src.half_width);
    }
  }
}

std::size_t SpeedMap::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }

double SpeedMap::median(const std::function<bool(const std::array<double, 3>&)>& where) const {
  std::vector<double> v;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] && (!where || where(grid.coords(i)))) v.push_back(speed[i]);
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  if (v.size() % 2) return v[m];
  const double hi = v[m];
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + m));
}

double SpeedMap::fraction_within(double truth, double rel,
                                 const std::function<bool(const std::array<double, 3>&)>& where) const {
  std::size_t n = 0, ok = 0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] && (!where || where(grid.coords(i)))) {
      ++n;
      if (std::abs(speed[i] - truth) <= rel * truth) ++ok;
    }
  return n ? static_cast<double>(ok) / n : 0.0;
}

namespace {

double uniform_spacing(const std::vector<double>& t) {
  const double dt = t[1] - t[0];
  if (!(dt > 0.0)) throw std::invalid_argument("snapshot times must increase");
  for (std::size_t k = 0; k < t.size(); ++k)
    if (std::abs(t[k] - t[0] - k * dt) > 1e-6 * dt) throw std::invalid_argument("snapshots must be evenly spaced");
  return dt;
}

// Multilinear interpolation of f at x; x must lie in the grid box.
double interpolate(const Grid& g, const Field& f, const std::array<double, 3>& x) {
  std::array<int, 3> i0{0, 0, 0};
  std::array<double, 3> w{0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) {
    const double s = std::clamp((x[a] - g.origin[a]) / g.h, 0.0, static_cast<double>(g.cells[a]));
    i0[a] = std::min(static_cast<int>(std::floor(s)), g.cells[a] - 1);
    w[a] = s - i0[a];
  }
  double out = 0.0;
  const int corners = 1 << g.dim;
  for (int c = 0; c < corners; ++c) {
    double wt = 1.0;
    std::array<int, 3> ix{0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      const int bit = (c >> a) & 1;
      ix[a] = i0[a] + bit;
      wt *= bit ? w[a] : 1.0 - w[a];
    }
    if (wt != 0.0) out += wt * f[g.index(ix[0], ix[1], ix[2])];
  }
  return out;
}

SpeedMap time_of_flight(const Grid& g, const std::vector<MultiField>& snaps, const SpeedOptions& opt, double dts,
                        const std::vector<unsigned char>& strong) {
  const std::size_t n = g.size(), nt = snaps.size();
  const int dim = static_cast<int>(snaps.front().size());
  const double delta = opt.baseline > 0.0 ? opt.baseline : 10.0 * g.h;
  const double record = (nt - 1) * dts;
  const int L = static_cast<int>(std::floor((opt.max_lag > 0.0 ? std::min(opt.max_lag, record) : 0.5 * record) / dts));
  if (L < 2) throw std::invalid_argument("time_of_flight: lag window shorter than two snapshot intervals");

  const std::size_t gate = opt.gate > 0.0 ? static_cast<std::size_t>(std::ceil(opt.gate / dts)) + 1 : 0;
  SpeedMap m{g, Field(n, std::numeric_limits<double>::quiet_NaN()), std::vector<unsigned char>(n, 0)};
  std::vector<double> sig(nt * dim), ref(nt * dim), corr(L + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!strong[i]) continue;
    const auto x = g.coords(i);
    std::array<double, 3> o{0.0, 0.0, 0.0};
    double s = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      o[a] = std::clamp(x[a], opt.footprint_lo[a], opt.footprint_hi[a]);
      s += (x[a] - o[a]) * (x[a] - o[a]);
    }
    s = std::sqrt(s);
    if (s < delta + g.h) continue;
    std::array<double, 3> xr = x;
    for (int a = 0; a < g.dim; ++a) xr[a] = o[a] + (s - delta) / s * (x[a] - o[a]);
    for (std::size_t k = 0; k < nt; ++k)
      for (int a = 0; a < dim; ++a) {
        sig[k * dim + a] = snaps[k][a][i];
        ref[k * dim + a] = interpolate(g, snaps[k][a], xr);
      }
    // Gate the reference to its first arrival so later reflections do not
    // dominate the correlation.
    std::size_t k0 = 0, k1 = nt;
    if (gate > 0) {
      double rmax = 0.0;
      for (std::size_t k = 0; k < nt; ++k) {
        double m2 = 0.0;
        for (int a = 0; a < dim; ++a) m2 += ref[k * dim + a] * ref[k * dim + a];
        rmax = std::max(rmax, m2);
      }
      while (k0 < nt) {
        double m2 = 0.0;
        for (int a = 0; a < dim; ++a) m2 += ref[k0 * dim + a] * ref[k0 * dim + a];
        if (m2 >= 0.04 * rmax) break;
        ++k0;
      }
      k1 = std::min(nt, k0 + gate);
    }
    // corr(l) = sum_t u(x, t + l) . u(x_ref, t)
    for (int l = 0; l <= L; ++l) {
      double c = 0.0;
      for (std::size_t k = k0; k < k1 && k + l < nt; ++k)
        for (int a = 0; a < dim; ++a) c += sig[(k + l) * dim + a] * ref[k * dim + a];
      corr[l] = c;
    }
    const int best = static_cast<int>(std::max_element(corr.begin(), corr.end()) - corr.begin());
    if (best == 0 || best == L || !(corr[best] > 0.0)) continue;
    const double den = corr[best - 1] - 2.0 * corr[best] + corr[best + 1];
    const double shift = den < 0.0 ? 0.5 * (corr[best - 1] - corr[best + 1]) / den : 0.0;
    const double lag = (best + shift) * dts;
    if (!(lag > 0.0)) continue;
    m.speed[i] = delta / lag;
    m.mask[i] = 1;
  }
  return m;
}

SpeedMap phase_gradient(const Grid& g, const std::vector<MultiField>& snaps, const std::vector<double>& t,
                        const SpeedOptions& opt, const std::vector<unsigned char>& strong, int margin) {
  const std::size_t n = g.size();
  const int dim = static_cast<int>(snaps.front().size());
  const double omega = 2.0 * std::numbers::pi * opt.frequency;
  MultiField re = make_field(g, dim), im = make_field(g, dim);
  for (std::size_t k = 0; k < snaps.size(); ++k) {
    const double c = std::cos(omega * t[k]), sn = -std::sin(omega * t[k]);
    for (int a = 0; a < dim; ++a)
      for (std::size_t i = 0; i < n; ++i) {
        re[a][i] += c * snaps[k][a][i];
        im[a][i] += sn * snaps[k][a][i];
      }
  }
  // Wavenumber from the phase advance between neighbours, arg(U(x+) . conj(U(x-))) / |x+ - x-|,
  // which is exact for a sampled plane wave.
  std::vector<std::array<double, 3>> k(n, {0.0, 0.0, 0.0});
  Field amp2(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (int a = 0; a < dim; ++a) amp2[i] += re[a][i] * re[a][i] + im[a][i] * im[a][i];
  // Both neighbours must carry valid samples: interior nodes only, and one
  // layer further in when boundary samples are excluded.
  std::vector<unsigned char> usable(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ix = g.ijk(i);
    bool ok = true;
    for (int ax = 0; ax < g.dim; ++ax) ok = ok && ix[ax] >= margin && ix[ax] <= g.cells[ax] - margin;
    usable[i] = ok;
    if (!ok) continue;
    for (int ax = 0; ax < g.dim; ++ax) {
      const std::size_t st = g.stride(ax);
      std::complex<double> z = 0.0;
      for (int a = 0; a < dim; ++a)
        z += std::complex<double>(re[a][i + st], im[a][i + st]) * std::complex<double>(re[a][i - st], -im[a][i - st]);
      k[i][ax] = std::arg(z) / (2.0 * g.h);
    }
  }
  const double amax = std::sqrt(*std::max_element(amp2.begin(), amp2.end()));
  SpeedMap m{g, Field(n, std::numeric_limits<double>::quiet_NaN()), std::vector<unsigned char>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (!strong[i] || !usable[i] || std::sqrt(amp2[i]) < opt.amplitude_floor * amax) continue;
    double kk = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) kk += k[i][ax] * k[i][ax];
    const double knorm = std::sqrt(kk);
    if (!(knorm > 0.0)) continue;
    m.speed[i] = omega / knorm;
    m.mask[i] = 1;
  }
  return m;
}

}  // namespace

SpeedMap estimate_speed(const Grid& g, const std::vector<Snapshot>& snaps, const SpeedOptions& opt) {
  g.validate();
  if (snaps.size() < 10) throw std::invalid_argument("estimate_speed needs at least 10 snapshots");
  for (const Snapshot& s : snaps) {
    if (s.u.size() != static_cast<std::size_t>(g.dim)) throw std::invalid_argument("snapshot does not match the grid");
    for (const Field& f : s.u)
      if (f.size() != g.size()) throw std::invalid_argument("snapshot does not match the grid");
  }
  std::vector<double> t;
  for (const Snapshot& s : snaps) t.push_back(s.t);
  const double dts = uniform_spacing(t);
  if (opt.method == SpeedMethod::PhaseGradient && !(opt.frequency > 0.0))
    throw std::invalid_argument("phase_gradient needs the drive frequency");
  if (opt.frequency > 0.0 && t.back() - t.front() < 1.0 / opt.frequency * (1.0 - 1e-9))
    throw std::invalid_argument("snapshots span less than one drive period");
  if (!(opt.amplitude_floor >= 0.0 && opt.amplitude_floor < 1.0))
    throw std::invalid_argument("amplitude_floor must lie in [0, 1)");

  const std::size_t n = g.size();
  std::vector<MultiField> sig;
  sig.reserve(snaps.size());
  if (opt.signal == SpeedSignal::Curl) {
    const GridOps ops(g, 2);
    for (const Snapshot& s : snaps) {
      MultiField w = make_field(g, g.dim == 2 ? 1 : 3);
      ops.curl(s.u, w);
      sig.push_back(std::move(w));
    }
  } else {
    for (const Snapshot& s : snaps) sig.push_back(s.u);
  }
  Field peak(n, 0.0);
  for (const MultiField& s : sig)
    for (std::size_t i = 0; i < n; ++i) {
      double m2 = 0.0;
      for (const Field& f : s) m2 += f[i] * f[i];
      peak[i] = std::max(peak[i], m2);
    }
  const double pmax = std::sqrt(*std::max_element(peak.begin(), peak.end()));
  if (!(pmax > 0.0)) throw std::runtime_error("estimate_speed: the recorded field is flat (identically zero)");
  // The curl on the boundary uses one-sided differences centred half a cell
  // inwards; those samples are not used.
  const bool curl = opt.signal == SpeedSignal::Curl;
  std::vector<unsigned char> strong(n);
  for (std::size_t i = 0; i < n; ++i)
    strong[i] = std::sqrt(peak[i]) >= opt.amplitude_floor * pmax && !(curl && g.on_boundary(i));

  return opt.method == SpeedMethod::TimeOfFlight ? time_of_flight(g, sig, opt, dts, strong)
                                                 : phase_gradient(g, sig, t, opt, strong, curl ? 2 : 1);
}

// ---------------------------------------------------------------------------

ResidualAccumulator::ResidualAccumulator(const MaterialField& b, const BoundarySpec& bc, int order)
    : mf_(b), ops_(b.grid(), order), dim_(b.grid().dim) {
  const Grid& g = mf_.grid();
  const std::size_t n = g.size();
  for (int f = 0; f < 2 * dim_; ++f) weak_[f] = bc.faces[f] == BoundaryKind::TractionFree;
  evaluated_.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ix = g.ijk(i);
    for (int a = 0; a < dim_; ++a) {
      if (ix[a] == 0 && bc.faces[2 * a] == BoundaryKind::Dirichlet) evaluated_[i] = 0;
      if (ix[a] == g.cells[a] && bc.faces[2 * a + 1] == BoundaryKind::Dirichlet) evaluated_[i] = 0;
    }
  }
  const int ns = sym_size(dim_);
  e_cur_ = e_next_ = sigma_ = make_field(g, ns);
  div_ = make_field(g, dim_);
  phiV_.assign(mf_.n_viscous(), Field(n, 0.0));
  phiD_.assign(mf_.n_viscous(), make_field(g, ns));
  sum_r2_.assign(n, 0.0);
  sum_i2_.assign(n, 0.0);
}

void ResidualAccumulator::stress_divergence(MultiField& out) {
  const std::size_t n = mf_.grid().size();
  const int ns = sym_size(dim_);
  std::array<bool, 6> diag{};
  for (int p = 0; p < dim_; ++p) diag[SymTensor::packed_index(dim_, p, p)] = true;
  for (std::size_t i = 0; i < n; ++i) {
    double tr_e = 0.0;
    for (int c = 0; c < ns; ++c)
      if (diag[c]) tr_e += e_cur_[c][i];
    double s[6] = {0, 0, 0, 0, 0, 0};
    for (int j = 0; j < mf_.n_units(); ++j) {
      const double lam = mf_.lambda(j)[i], two_mu = 2.0 * mf_.mu(j)[i];
      const bool visc = j < mf_.n_viscous();
      const double pv = visc ? phiV_[j][i] : 0.0;
      const double tr_psi = tr_e - dim_ * pv;
      for (int c = 0; c < ns; ++c) {
        const double psi = e_cur_[c][i] - (visc ? phiD_[j][c][i] : 0.0) - (diag[c] ? pv : 0.0);
        s[c] += two_mu * psi + (diag[c] ? lam * tr_psi : 0.0);
      }
    }
    for (int c = 0; c < ns; ++c) sigma_[c][i] = s[c];
  }
  ops_.tensor_div(sigma_, weak_, out);
}

void ResidualAccumulator::push(double t, const MultiField& u) {
  const Grid& g = mf_.grid();
  const std::size_t n = g.size();
  if (u.size() != static_cast<std::size_t>(dim_)) throw std::invalid_argument("residual: wrong component count");
  for (const Field& f : u)
    if (f.size() != n) throw std::invalid_argument("residual: field does not match the grid");
  const int ns = sym_size(dim_);

  if (pushed_ == 0) {
    if (std::abs(t) > 1e-12) throw std::invalid_argument("residual: the history must start at t = 0");
    ops_.sym_grad(u, e_cur_);
    u_cur_ = u;
    t_last_ = 0.0;
    ++pushed_;
    return;
  }
  const double dt = t - t_last_;
  if (!(dt > 0.0)) throw std::invalid_argument("residual: times must increase");
  if (pushed_ == 1) {
    spacing_ = dt;
    for (int j = 0; j < mf_.n_viscous(); ++j) {
      std::array<Field, 3> wv{Field(n), Field(n), Field(n)}, wd = wv;
      for (std::size_t i = 0; i < n; ++i) {
        const double eta = mf_.eta(j)[i], lam = mf_.lambda(j)[i], mu = mf_.mu(j)[i];
        const EtdWeights a = etd_weights((dim_ * lam + 2.0 * mu) / eta, dt);
        const EtdWeights c = etd_weights(2.0 * mu / eta, dt);
        wv[0][i] = a.a, wv[1][i] = a.b, wv[2][i] = a.c;
        wd[0][i] = c.a, wd[1][i] = c.b, wd[2][i] = c.c;
      }
      wv_.push_back(std::move(wv));
      wd_.push_back(std::move(wd));
    }
  } else if (std::abs(dt - spacing_) > 1e-6 * spacing_) {
    throw std::invalid_argument("residual: levels must be evenly spaced");
  }

  // Residual at the previous level, which now has both neighbours.
  if (pushed_ >= 2) {
    stress_divergence(div_);
    const Field& rho = mf_.rho();
    const double inv = 1.0 / (spacing_ * spacing_);
    for (std::size_t i = 0; i < n; ++i) {
      if (!evaluated_[i]) continue;
      double r2 = 0.0, i2 = 0.0;
      for (int a = 0; a < dim_; ++a) {
        const double acc = rho[i] * (u[a][i] - 2.0 * u_cur_[a][i] + u_prev_[a][i]) * inv;
        r2 += (acc - div_[a][i]) * (acc - div_[a][i]);
        i2 += acc * acc;
      }
      sum_r2_[i] += r2;
      sum_i2_[i] += i2;
    }
    ++evals_;
  }

  // Advance the dashpot strains to time t with the strain linear over the interval.
  ops_.sym_grad(u, e_next_);
  std::array<bool, 6> diag{};
  for (int p = 0; p < dim_; ++p) diag[SymTensor::packed_index(dim_, p, p)] = true;
  for (int j = 0; j < mf_.n_viscous(); ++j)
    for (std::size_t i = 0; i < n; ++i) {
      double tr0 = 0.0, tr1 = 0.0;
      for (int c = 0; c < ns; ++c)
        if (diag[c]) tr0 += e_cur_[c][i], tr1 += e_next_[c][i];
      const double f0 = tr0 / dim_, f1 = tr1 / dim_;
      phiV_[j][i] = wv_[j][0][i] * phiV_[j][i] + wv_[j][1][i] * f0 + wv_[j][2][i] * (f1 - f0);
      for (int c = 0; c < ns; ++c) {
        const double d0 = e_cur_[c][i] - (diag[c] ? f0 : 0.0), d1 = e_next_[c][i] - (diag[c] ? f1 : 0.0);
        phiD_[j][c][i] = wd_[j][0][i] * phiD_[j][c][i] + wd_[j][1][i] * d0 + wd_[j][2][i] * (d1 - d0);
      }
    }
  std::swap(e_cur_, e_next_);
  u_prev_ = std::move(u_cur_);
  u_cur_ = u;
  t_last_ = t;
  ++pushed_;
}

Field ResidualAccumulator::rms() const {
  Field r(sum_r2_.size(), 0.0);
  if (evals_ == 0) return r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sqrt(sum_r2_[i] / evals_);
  return r;
}

Field ResidualAccumulator::inertia_rms() const {
  Field r(sum_i2_.size(), 0.0);
  if (evals_ == 0) return r;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sqrt(sum_i2_[i] / evals_);
  return r;
}

Field residual_field(const std::vector<Snapshot>& snaps, const MaterialField& b, const BoundarySpec& bc, int order) {
  if (snaps.size() < 3) throw std::invalid_argument("residual needs at least three consecutive snapshots");
  ResidualAccumulator acc(b, bc, order);
  for (const Snapshot& s : snaps) acc.push(s.t, s.u);
  return acc.rms();
}

// ---------------------------------------------------------------------------

bool DiscriminationReport::pass() const {
  if (counts.match_detected > 0 || counts.mismatch_quiescent_detected > 0) return false;
  for (const auto& r : regions)
    if (r.verdict == "missed") return false;
  return true;
}

std::string DiscriminationReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << "nodes: " << grid.size() << '\n'
     << "peak_displacement: " << peak_max << '\n'
     << "self_residual_max: " << floor_max << '\n'
     << "inertia_max: " << inertia_max << '\n'
     << "floor_ratio: " << (inertia_max > 0.0 ? floor_max / inertia_max : 0.0) << '\n'
     << "support_nodes: " << std::count(support.begin(), support.end(), 1) << '\n'
     << "quiescent_nodes: " << std::count(support.begin(), support.end(), 0) << '\n'
     << "mismatch_nodes: " << std::count(mismatch.begin(), mismatch.end(), 1) << '\n'
     << "active_nodes: " << std::count(active.begin(), active.end(), 1) << '\n'
     << "detected_nodes: " << std::count(detected.begin(), detected.end(), 1) << '\n';
  for (const auto& r : regions)
    os << "region " << r.region << ": " << r.verdict << " (nodes " << r.nodes << ", mismatch " << r.mismatch
       << ", active " << r.active << ", detected " << r.detected << ", quiescent " << r.quiescent
       << ", residual/floor " << r.contrast() << ")\n";
  os << "unidentifiable: " << (unidentifiable() ? "yes" : "no") << '\n'
     << "result: " << (pass() ? "pass" : "fail") << '\n';
  return os.str();
}

std::string DiscriminationReport::contingency_csv() const {
  const auto& c = counts;
  std::ostringstream os;
  os << "speeds,field,detected,not_detected\n"
     << "mismatch,active," << c.mismatch_active_detected << ',' << c.mismatch_active_missed << '\n'
     << "mismatch,weak," << c.mismatch_weak_detected << ',' << c.mismatch_weak_clear << '\n'
     << "mismatch,quiescent," << c.mismatch_quiescent_detected << ',' << c.mismatch_quiescent_clear << '\n'
     << "match,any," << c.match_detected << ',' << c.match_clear << '\n';
  return os.str();
}

DiscriminationReport uniqueness_experiment(const RunSpec& a, const Material& b_base,
                                           const std::vector<Region>& b_regions, const DiscriminationOptions& opt) {
  if (opt.every_steps < 1) throw std::invalid_argument("every_steps must be >= 1");
  if (b_base.n_units() != a.material.n_units() || b_base.n_viscous() != a.material.n_viscous() ||
      b_base.dim() != a.material.dim())
    throw std::invalid_argument("material B must have the same unit layout as material A");
  const Grid& g = a.grid;
  g.validate();
  const MaterialField ma(g, a.material, a.regions), mb(g, b_base, b_regions);
  const std::size_t n = g.size();
  const int dim = g.dim;

  ResidualAccumulator ra(ma, a.boundary, a.options.order), rb(mb, a.boundary, a.options.order);
  Field peak(n, 0.0);
  RunHooks hooks;
  hooks.keep_snapshots = false;
  hooks.on_level = [&](const LevelView& lv) {
    const MultiField& u = lv.solver->u();
    for (std::size_t i = 0; i < n; ++i) {
      double m2 = 0.0;
      for (int c = 0; c < dim; ++c) m2 += u[c][i] * u[c][i];
      peak[i] = std::max(peak[i], m2);
    }
    if (lv.n % opt.every_steps == 0) {
      ra.push(lv.t, u);
      rb.push(lv.t, u);
    }
  };
  RunSpec spec = a;
  spec.snapshots = {};
  spec.snapshots.include_final = false;
  run(spec, hooks);
  if (ra.evaluations() < 1) throw std::invalid_argument("run too short for a second time difference");

  DiscriminationReport rep;
  rep.grid = g;
  rep.residual = rb.rms();
  rep.floor = ra.rms();
  for (auto& p : peak) p = std::sqrt(p);
  rep.peak = peak;
  rep.peak_max = *std::max_element(peak.begin(), peak.end());
  rep.floor_max = *std::max_element(rep.floor.begin(), rep.floor.end());
  const Field inertia = ra.inertia_rms();
  rep.inertia_max = *std::max_element(inertia.begin(), inertia.end());
  if (rep.inertia_max > 0.0 && rep.floor_max > opt.max_floor_ratio * rep.inertia_max) {
    std::ostringstream os;
    os << "snapshot spacing too coarse: self-residual " << rep.floor_max << " vs inertia " << rep.inertia_max
       << " (ratio limit " << opt.max_floor_ratio << ")";
    throw CoarseSnapshotError(os.str());
  }

  // Mismatch of the unrelaxed shear speed squared.
  rep.mismatch.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double sa = 0.0, sb = 0.0;
    for (int j = 0; j < ma.n_units(); ++j) {
      sa += ma.mu(j)[i];
      sb += mb.mu(j)[i];
    }
    sa /= ma.rho()[i];
    sb /= mb.rho()[i];
    rep.mismatch[i] = std::abs(sa - sb) > 1e-12 * std::max(std::abs(sa), std::abs(sb));
  }
  // Any parameter difference reaches the residual of nodes within the stencil reach.
  std::vector<unsigned char> differs(n, 0), band(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    bool d = ma.rho()[i] != mb.rho()[i];
    for (int j = 0; j < ma.n_units(); ++j) d = d || ma.mu(j)[i] != mb.mu(j)[i] || ma.lambda(j)[i] != mb.lambda(j)[i];
    for (int j = 0; j < ma.n_viscous(); ++j) d = d || ma.eta(j)[i] != mb.eta(j)[i];
    differs[i] = d;
  }
  const int reach = a.options.order == 2 ? 1 : 6;
  for (std::size_t i = 0; i < n; ++i) {
    if (!differs[i]) continue;
    const auto ix = g.ijk(i);
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int c = 0; c < dim; ++c) {
      lo[c] = std::max(0, ix[c] - reach);
      hi[c] = std::min(g.cells[c], ix[c] + reach);
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z) band[g.index(x, y, z)] = 1;
  }

  const double clamp = opt.floor_clamp * rep.floor_max;
  rep.support.assign(n, 0);
  rep.active.assign(n, 0);
  rep.detected.assign(n, 0);
  const auto& eval = ra.evaluated();
  for (std::size_t i = 0; i < n; ++i) {
    rep.support[i] = peak[i] > opt.quiet_fraction * rep.peak_max;
    rep.active[i] = peak[i] >= opt.active_fraction * rep.peak_max;
    rep.detected[i] = eval[i] && rep.residual[i] > 0.0 &&
                      rep.residual[i] >= opt.significance * std::max(rep.floor[i], clamp);
    auto& c = rep.counts;
    const bool det = rep.detected[i];
    if (!eval[i]) continue;
    if (rep.mismatch[i]) {
      if (rep.active[i])
        ++(det ? c.mismatch_active_detected : c.mismatch_active_missed);
      else if (rep.support[i])
        ++(det ? c.mismatch_weak_detected : c.mismatch_weak_clear);
      else
        ++(det ? c.mismatch_quiescent_detected : c.mismatch_quiescent_clear);
    } else if (band[i]) {
      ++c.boundary_band;
    } else {
      ++(det ? c.match_detected : c.match_clear);
    }
  }

  for (std::size_t k = 0; k < b_regions.size(); ++k) {
    RegionVerdict v;
    v.region = static_cast<int>(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (!eval[i] || b_regions[k].signed_distance(g.coords(i), dim) > 0.0) continue;
      ++v.nodes;
      if (!rep.mismatch[i]) continue;
      ++v.mismatch;
      if (rep.active[i]) {
        ++v.active;
        if (rep.detected[i]) ++v.detected;
        v.residual_rms += rep.residual[i] * rep.residual[i];
        v.floor_rms += rep.floor[i] * rep.floor[i];
      }
      if (!rep.support[i]) {
        ++v.quiescent;
        if (rep.detected[i]) ++v.quiescent_detected;
      }
    }
    if (v.active > 0) {
      v.residual_rms = std::sqrt(v.residual_rms / v.active);
      v.floor_rms = std::sqrt(v.floor_rms / v.active);
    }
    if (v.mismatch == 0)
      v.verdict = "match";
    else if (v.active > 0)
      v.verdict = v.detected >= opt.detect_fraction * v.active ? "mismatch detected" : "missed";
    else if (v.quiescent == v.mismatch && v.quiescent_detected == 0)
      v.verdict = "unidentifiable";
    else
      v.verdict = "inconclusive";
    rep.regions.push_back(v);
  }
  return rep;
}

}  // namespace visco
