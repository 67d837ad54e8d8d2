#pragma once

// Explicit leapfrog integration of the internal-variable viscoelastic wave
// system on a regular grid.
//
// Level n holds u^n, the strain e^n = sym_grad(u^n) and the dashpot strains
// phi^n; velocities live at half steps. One step is
//   S^n       = sum_j C_j (e^n - phi_j^n)
//   v^{n+1/2} = v^{n-1/2} + dt div(S^n) / rho
//   u^{n+1}   = u^n + dt v^{n+1/2}
//   phi^{n+1} = memory update with e linear between e^n and e^{n+1}
// Dirichlet nodes are overwritten with the prescribed data; traction-free faces
// enter through the weak boundary term of GridOps::tensor_div.

#include <array>
#include <functional>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "visco/grid.hpp"
#include "visco/material_field.hpp"
#include "visco/source.hpp"

namespace visco {

enum class BoundaryKind { Dirichlet, TractionFree };

struct BoundarySpec {
  std::array<BoundaryKind, 6> faces{BoundaryKind::Dirichlet,    BoundaryKind::TractionFree,
                                    BoundaryKind::TractionFree, BoundaryKind::TractionFree,
                                    BoundaryKind::TractionFree, BoundaryKind::TractionFree};

  /// Throws std::invalid_argument if a driven face is not Dirichlet or, with an
  /// active drive, no traction-free face remains.
  void validate(int dim, const SourceSpec& source) const;
  friend bool operator==(const BoundarySpec&, const BoundarySpec&) = default;
};

enum class MemoryScheme {
  Exponential,  ///< exact for strain linear over the step
  Trapezoidal,  ///< Crank-Nicolson; exactly dissipative for the discrete energy
};

struct SolverOptions {
  int order = 2;
  double cfl = 0.5;
  bool frozen_dashpots = false;
  MemoryScheme memory = MemoryScheme::Exponential;
  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

class InstabilityError : public std::runtime_error {
public:
  InstabilityError(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

private:
  int step_;
};

/// cfl * h / (sqrt(d) * alpha_max). Throws unless 0 < cfl <= 1.
double stable_dt(double alpha_max, const Grid& g, double cfl);
double stable_dt(const MaterialField& m, double cfl);

class Solver;

/// Read-only view of level n after Solver::prepare().
struct LevelView {
  int n;
  double t;
  const Solver* solver;
};

class Solver {
public:
  Solver(const MaterialField& m, const BoundarySpec& b, DirichletData g, const SolverOptions& opts, double dt);

  /// Replaces the zero initial state; v_minus_half is v^{-1/2}. Dirichlet nodes keep the prescribed data.
  void set_initial_state(const MultiField& u0, const MultiField& v_minus_half);

  /// Computes v^{n+1/2} and the energy of level n. Throws InstabilityError on non-finite values.
  void prepare();
  /// Moves to level n+1. Requires prepare().
  void advance();
  void step() {
    prepare();
    advance();
  }
  LevelView level() const { return {n_, time(), this}; }

  int step_index() const { return n_; }
  double time() const { return n_ * dt_; }
  double dt() const { return dt_; }
  const GridOps& ops() const { return ops_; }
  const Grid& grid() const { return ops_.grid(); }
  const MaterialField& material() const { return mf_; }
  const BoundarySpec& boundary() const { return bc_; }

  const MultiField& u() const { return u_; }
  /// v^{n+1/2} after prepare(), v^{n-1/2} before.
  const MultiField& v_half() const { return prepared_ ? v_new_ : v_old_; }
  /// (v^{n-1/2} + v^{n+1/2}) / 2, valid after prepare().
  const MultiField& v_mid() const { return v_mid_; }
  const MultiField& strain() const { return e_; }
  const Field& phiV(int j) const { return phiV_[j]; }
  const MultiField& phiD(int j) const { return phiD_[j]; }
  const std::vector<unsigned char>& dirichlet_mask() const { return is_dirichlet_; }

  /// E^n = 1/2 sum H rho v^{n-1/2} . v^{n+1/2} + 1/2 sum H sum_j (C_j psi_j, psi_j), after prepare().
  double energy() const { return energy_; }
  /// sum H sum_j eta_j |(phi_j^n - phi_j^{n-1}) / dt|^2 over the last advance().
  double dissipation() const { return dissipation_; }

  /// sum_j (C_j psi_j, psi_j) at one node of the current level.
  double potential_density(std::size_t idx) const;
  /// rho |v_mid|^2 at one node, after prepare().
  double kinetic_density(std::size_t idx) const;

private:
  void compute_stress();
  void apply_dirichlet_u(double t);

  MaterialField mf_;
  BoundarySpec bc_;
  DirichletData g_;
  SolverOptions opts_;
  double dt_;
  GridOps ops_;
  int dim_;
  int n_ = 0;
  bool prepared_ = false;
  bool update_memory_;

  std::array<bool, 6> weak_faces_{};
  std::vector<unsigned char> is_dirichlet_;
  std::vector<std::size_t> dirichlet_nodes_;
  std::vector<unsigned> dirichlet_faces_;
  std::vector<double> g_now_, g_next_;

  MultiField u_, v_old_, v_new_, v_mid_, e_, e_next_, s_, div_;
  std::vector<Field> phiV_;
  std::vector<MultiField> phiD_;
  // Per viscous unit, per node: update weights (a, b, c) for the two subspaces.
  std::vector<std::array<Field, 3>> wv_, wd_;

  double energy_ = 0.0;
  double dissipation_ = 0.0;
};

struct SnapshotSchedule {
  std::vector<double> times;  ///< explicit times, rounded to the nearest step
  double interval = 0.0;      ///< every `interval` seconds from 0 when > 0
  int every_steps = 0;        ///< every k steps when > 0
  bool include_final = true;
  friend bool operator==(const SnapshotSchedule&, const SnapshotSchedule&) = default;
};

struct Snapshot {
  int step;
  double t;
  MultiField u, v;  ///< v at the integer level (mean of the two half steps)
};

struct EnergySample {
  double t;
  double total;
  double cone;         ///< NaN when no cone is monitored
  double dissipation;  ///< mean rate over (t - dt, t]; 0 at t = 0
};

struct RunSpec {
  Grid grid;
  Material material{{MaxwellUnit{{1.0, 1.0, 2}, std::nullopt}}, 1.0};
  std::vector<Region> regions;
  BoundarySpec boundary;
  SourceSpec source;
  SolverOptions options;
  double duration = 0.0;
  SnapshotSchedule snapshots;
  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

struct RunHooks {
  std::function<double(const LevelView&)> cone_energy;
  std::function<void(const LevelView&)> on_level;
  bool keep_snapshots = true;
  bool keep_velocity = true;  ///< snapshots carry v; false leaves Snapshot::v empty
};

struct RunResult {
  double dt = 0.0;
  int steps = 0;
  double alpha_max = 0.0;
  std::vector<Snapshot> snapshots;
  std::vector<EnergySample> trace;
};

/// Time step used by run(): the stable step shrunk so that duration is an integer number of steps.
double run_dt(const MaterialField& m, const SolverOptions& o, double duration, int* steps = nullptr);

/// Step indices selected by a schedule for a run of `steps` steps of size dt.
std::set<int> snapshot_steps(const SnapshotSchedule& s, double dt, int steps);

RunResult run(const RunSpec& spec, const RunHooks& hooks = {});

}  // namespace visco
