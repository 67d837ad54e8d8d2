#pragma once

// Boundary drives: a windowed sinusoid applied on part of one Dirichlet face.

#include <array>
#include <functional>

namespace visco {

/// g(x, t) = A w(t) sin(2 pi f t) p(x) e, where w ramps up over `ramp`, holds,
/// and ramps down to zero at `duration`; p is a compact bump (1 - s^2)^4 of the
/// in-face distance s / half_width from `center`.
struct SourceSpec {
  bool enabled = false;
  int face = 0;  ///< Face id, see Face in grid.hpp
  double frequency = 50.0;  ///< Hz
  double amplitude = 1e-6;  ///< m
  double ramp = 0.01;       ///< s
  double duration = 0.04;   ///< s; the drive is zero afterwards
  std::array<double, 3> polarization{0.0, 1.0, 0.0};
  std::array<double, 3> center{0.0, 0.0, 0.0};
  double half_width = 0.01;  ///< m

  double envelope(double t) const;
  /// A w(t) sin(2 pi f t).
  double time_factor(double t) const;
  double profile(const std::array<double, 3>& x, int dim) const;
  /// Time at which the drive becomes identically zero.
  double end_time() const { return enabled ? duration : 0.0; }

  friend bool operator==(const SourceSpec&, const SourceSpec&) = default;
};

/// Writes the prescribed displacement at node position x and time t into g[0..dim).
/// faces is a bitmask (bit f set for Face f) of the boundary faces the node lies on.
using DirichletData = std::function<void(double t, const std::array<double, 3>& x, unsigned faces, double* g)>;

/// Zero everywhere except on the source face, where the burst is applied.
DirichletData make_dirichlet_data(const SourceSpec& s, int dim);

}  // namespace visco
