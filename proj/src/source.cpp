#include "visco/source.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace visco {

namespace {

double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

}  // namespace

double SourceSpec::envelope(double t) const {
  if (!enabled || t <= 0.0 || t >= duration) return 0.0;
  if (ramp <= 0.0) return 1.0;
  return smoothstep5(t / ramp) * smoothstep5((duration - t) / ramp);
}

double SourceSpec::time_factor(double t) const {
  return amplitude * envelope(t) * std::sin(2.0 * std::numbers::pi * frequency * t);
}

double SourceSpec::profile(const std::array<double, 3>& x, int dim) const {
  const int normal = face / 2;
  double s2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    if (a == normal) continue;
    const double d = (x[a] - center[a]) / half_width;
    s2 += d * d;
  }
  if (s2 >= 1.0) return 0.0;
  const double b = 1.0 - s2;
  return b * b * b * b;
}

DirichletData make_dirichlet_data(const SourceSpec& s, int dim) {
  if (s.enabled && (s.face < 0 || s.face >= 2 * dim)) throw std::invalid_argument("source face out of range");
  return [s, dim](double t, const std::array<double, 3>& x, unsigned faces, double* g) {
    double amp = 0.0;
    if (s.enabled && (faces & (1u << s.face))) {
      const double tf = s.time_factor(t);
      if (tf != 0.0) amp = tf * s.profile(x, dim);
    }
    for (int a = 0; a < dim; ++a) g[a] = amp * s.polarization[a];
  };
}

}  // namespace visco
