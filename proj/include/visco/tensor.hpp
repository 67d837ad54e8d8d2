#pragma once

/**
 * @file tensor.hpp
 * @brief Symmetric rank-2 tensors and isotropic rank-4 elasticity tensors in d = 2 or 3.
 *
 * Every isotropic tensor C = lambda I(x)I + 2 mu Id is diagonal in the orthogonal
 * volumetric/deviatoric split of symmetric tensors:
 *
 *   C e = (d lambda + 2 mu) e^V + 2 mu e^D,   e^V = (tr e / d) I,   e^D = e - e^V.
 *
 * All operations below go through that spectral form.
 */

#include <array>
#include <cstddef>
#include <stdexcept>

namespace visco {

/// Number of independent components of a symmetric d x d tensor.
constexpr int sym_size(int dim) { return dim * (dim + 1) / 2; }

/// Symmetric d x d tensor stored as a packed upper triangle, row by row:
/// d=2: (00, 01, 11); d=3: (00, 01, 02, 11, 12, 22).
class SymTensor {
public:
  SymTensor() = default;
  explicit SymTensor(int dim);

  static SymTensor zero(int dim) { return SymTensor(dim); }
  static SymTensor identity(int dim);
  static SymTensor diag(double a, double b);
  static SymTensor diag(double a, double b, double c);

  int dim() const { return dim_; }

  double operator()(int p, int q) const { return c_[packed_index(dim_, p, q)]; }
  double& operator()(int p, int q) { return c_[packed_index(dim_, p, q)]; }

  /// Raw packed storage access, i in [0, sym_size(dim)).
  double operator[](int i) const { return c_[i]; }
  double& operator[](int i) { return c_[i]; }

  double trace() const;

  SymTensor& operator+=(const SymTensor& o);
  SymTensor& operator-=(const SymTensor& o);
  SymTensor& operator*=(double s);

  friend SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
  friend SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
  friend SymTensor operator*(double s, SymTensor a) { return a *= s; }
  friend SymTensor operator*(SymTensor a, double s) { return a *= s; }
  friend bool operator==(const SymTensor&, const SymTensor&) = default;

  static constexpr int packed_index(int dim, int p, int q) {
    if (p > q) { const int t = p; p = q; q = t; }
    // Row p of the upper triangle starts after p rows of decreasing length.
    return p * dim - p * (p - 1) / 2 + (q - p);
  }

private:
  int dim_ = 3;
  std::array<double, 6> c_{};
};

/// Frobenius inner product a : b = sum_pq a_pq b_pq.
double frobenius(const SymTensor& a, const SymTensor& b);
inline double frobenius_norm2(const SymTensor& a) { return frobenius(a, a); }

/// Isotropic elasticity tensor given by its Lame pair.
struct IsotropicModuli {
  double lambda = 0.0;  ///< first Lame modulus [Pa]
  double mu = 0.0;      ///< shear modulus [Pa]
  int dim = 3;

  /// Eigenvalue on the volumetric subspace, d*lambda + 2*mu.
  double bulk_eigenvalue() const { return dim * lambda + 2.0 * mu; }
  /// Eigenvalue on the deviatoric subspace, 2*mu.
  double shear_eigenvalue() const { return 2.0 * mu; }
  bool is_strongly_convex() const { return mu > 0.0 && bulk_eigenvalue() > 0.0; }

  friend bool operator==(const IsotropicModuli&, const IsotropicModuli&) = default;
};

struct VolDev {
  SymTensor vol;
  SymTensor dev;
};

/// (tr e / d) I and the trace-free remainder.
VolDev vol_dev_split(const SymTensor& e);

/// lambda tr(e) I + 2 mu e. Throws std::invalid_argument on dimension mismatch.
SymTensor apply_isotropic(const IsotropicModuli& c, const SymTensor& e);

/// exp(-t C / eta) e, i.e. one factor of a Maxwell relaxation tensor.
/// Throws std::invalid_argument for eta <= 0 or t < 0.
SymTensor exp_apply(const IsotropicModuli& c, double eta, double t, const SymTensor& e);

/// sup |(C z) : z| / |z|^2 over nonzero symmetric z.
double operator_norm(const IsotropicModuli& c);

/// inf (C z) : z / |z|^2 over nonzero symmetric z; positive iff strongly convex.
double convexity_margin(const IsotropicModuli& c);

/// (C a) : b, symmetric in (a, b).
double energy_product(const IsotropicModuli& c, const SymTensor& a, const SymTensor& b);

}  // namespace visco
