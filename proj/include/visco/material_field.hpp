#pragma once

// Per-node samples of a layered viscoelastic material: a base material with
// optional regions that rescale its parameters.

#include <array>
#include <vector>

#include "visco/constitutive.hpp"
#include "visco/grid.hpp"

namespace visco {

struct Region {
  enum class Shape { Ball, Box };
  Shape shape = Shape::Ball;
  std::array<double, 3> center{0, 0, 0};
  double radius = 0.0;
  std::array<double, 3> lo{0, 0, 0}, hi{0, 0, 0};
  double lambda_scale = 1.0, mu_scale = 1.0, eta_scale = 1.0, rho_scale = 1.0;
  /// Width of the smooth transition straddling the region boundary; 0 gives a sharp jump.
  double blend = 0.0;

  /// Signed distance to the region boundary (negative inside). Boxes use the Chebyshev form.
  double signed_distance(const std::array<double, 3>& x, int dim) const;
  /// 1 inside, 0 outside, quintic smoothstep across the blend band.
  double weight(const std::array<double, 3>& x, int dim) const;

  friend bool operator==(const Region&, const Region&) = default;
};

class MaterialField {
public:
  MaterialField(const Grid& g, const Material& base, const std::vector<Region>& regions = {});

  const Grid& grid() const { return g_; }
  const Material& base() const { return base_; }
  int n_units() const { return base_.n_units(); }
  int n_viscous() const { return base_.n_viscous(); }

  const Field& lambda(int j) const { return lambda_[j]; }
  const Field& mu(int j) const { return mu_[j]; }
  /// Viscosity of viscous unit j (j < n_viscous()).
  const Field& eta(int j) const { return eta_[j]; }
  const Field& rho() const { return rho_; }

  /// The material at one node.
  Material at(std::size_t idx) const;

  /// sqrt(sum_j |C_j| / rho) per node.
  Field alpha_field() const;
  double alpha_max() const;
  /// Unrelaxed shear speed sqrt(sum_j mu_j / rho) per node.
  Field shear_speed() const;

  /// Largest relative jump of any parameter between neighbouring nodes.
  double smoothness_lint() const;

private:
  Grid g_;
  Material base_;
  std::vector<Field> lambda_, mu_, eta_;
  Field rho_;
};

}  // namespace visco
