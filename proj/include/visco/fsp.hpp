#pragma once

// Finite speed of propagation: the speed bound alpha, the energy inside the
// shrinking ball |x - x0| <= R - alpha t, and a run-level verification.

#include <array>
#include <string>
#include <vector>

#include "visco/solver.hpp"

namespace visco {

/// sqrt(sum_j |C_j| / rho) for one material.
double alpha(const Material& m);
/// Maximum of the pointwise bound over the nodes within `radius` of `center`.
/// Throws std::invalid_argument when no node lies in the ball.
double alpha(const MaterialField& m, const std::array<double, 3>& center, double radius);

struct Cone {
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double radius = 0.0;
  double speed = 0.0;

  double radius_at(double t) const { return radius - speed * t; }
  double end_time() const { return radius / speed; }
  bool contains(const std::array<double, 3>& x, int dim, double t) const;
  /// Throws std::invalid_argument unless radius, speed > 0 and the ball lies inside the grid.
  void validate(const Grid& g) const;

  friend bool operator==(const Cone&, const Cone&) = default;
};

/// Midpoint-rule energy 1/2 sum h^d (rho |v|^2 + sum_j (C_j psi_j, psi_j)) over the
/// nodes inside the cone at the level's time; 0 once the cone is empty.
double cone_energy(const LevelView& lv, const Cone& cone);

struct FspTolerances {
  double field = 1e-3;  ///< interior/exterior amplitude ratio bound
  double rel = 1e-6;    ///< cone energy bound relative to the total energy
  double abs = 0.0;
  friend bool operator==(const FspTolerances&, const FspTolerances&) = default;
};

struct FspReport {
  Cone cone;
  FspTolerances tol;
  double t_end = 0.0;  ///< last monitored time, below min(duration, R / speed)
  int samples = 0;
  double max_cone_energy = 0.0;
  double max_cone_ratio = 0.0;  ///< max over t of E_cone / E_total (0 while E_total = 0)
  double max_interior_u = 0.0;  ///< max over t and interior nodes of |u|
  double max_exterior_u = 0.0;
  double amplitude_ratio = 0.0;  ///< max_interior_u / max_exterior_u
  bool energy_ok = true, field_ok = true;
  bool pass() const { return energy_ok && field_ok; }

  /// "key: value" lines.
  std::string to_text() const;
};

/// Observes a run level by level. Use hooks() with run(), then report().
class FspMonitor {
public:
  FspMonitor(const Grid& g, const Cone& cone, const FspTolerances& tol = {});

  /// Checks the initial data at level 0 (throws std::invalid_argument if they do
  /// not vanish in the ball), records the level and returns its cone energy.
  double observe(const LevelView& lv);
  RunHooks hooks(bool keep_snapshots = false);
  FspReport report() const;

private:
  Grid g_;
  FspReport r_;
};

/// Runs the spec under a monitor.
FspReport verify_fsp(const RunSpec& spec, const Cone& cone, const FspTolerances& tol = {},
                     RunResult* result = nullptr);

struct RefinementStudy {
  std::vector<int> cells;       ///< cells along axis 0 per level
  std::vector<double> leakage;  ///< amplitude ratio per level
  std::vector<double> orders;   ///< log2 of successive leakage ratios
};

/// Repeats verify_fsp with the grid scaled to each cell count (same physical extent).
RefinementStudy fsp_refinement(const RunSpec& spec, const Cone& cone, const std::vector<int>& cells,
                               const FspTolerances& tol = {});

}  // namespace visco
