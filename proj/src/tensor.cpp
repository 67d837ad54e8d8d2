#include "visco/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace visco {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw std::invalid_argument("tensor dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

void check_same_dim(int a, int b) {
  if (a != b) {
    throw std::invalid_argument("tensor dimension mismatch: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

}  // namespace

SymTensor::SymTensor(int dim) : dim_(dim) { check_dim(dim); }

SymTensor SymTensor::identity(int dim) {
  SymTensor t(dim);
  for (int p = 0; p < dim; ++p) t(p, p) = 1.0;
  return t;
}

SymTensor SymTensor::diag(double a, double b) {
  SymTensor t(2);
  t(0, 0) = a;
  t(1, 1) = b;
  return t;
}

SymTensor SymTensor::diag(double a, double b, double c) {
  SymTensor t(3);
  t(0, 0) = a;
  t(1, 1) = b;
  t(2, 2) = c;
  return t;
}

double SymTensor::trace() const {
  double s = 0.0;
  for (int p = 0; p < dim_; ++p) s += (*this)(p, p);
  return s;
}

SymTensor& SymTensor::operator+=(const SymTensor& o) {
  check_same_dim(dim_, o.dim_);
  for (int i = 0; i < sym_size(dim_); ++i) c_[i] += o.c_[i];
  return *this;
}

SymTensor& SymTensor::operator-=(const SymTensor& o) {
  check_same_dim(dim_, o.dim_);
  for (int i = 0; i < sym_size(dim_); ++i) c_[i] -= o.c_[i];
  return *this;
}

SymTensor& SymTensor::operator*=(double s) {
  for (int i = 0; i < sym_size(dim_); ++i) c_[i] *= s;
  return *this;
}

double frobenius(const SymTensor& a, const SymTensor& b) {
  check_same_dim(a.dim(), b.dim());
  double s = 0.0;
  for (int p = 0; p < a.dim(); ++p) {
    s += a(p, p) * b(p, p);
    for (int q = p + 1; q < a.dim(); ++q) s += 2.0 * a(p, q) * b(p, q);
  }
  return s;
}

VolDev vol_dev_split(const SymTensor& e) {
  const int d = e.dim();
  VolDev out{SymTensor::identity(d) * (e.trace() / d), e};
  out.dev -= out.vol;
  return out;
}

SymTensor apply_isotropic(const IsotropicModuli& c, const SymTensor& e) {
  check_same_dim(c.dim, e.dim());
  SymTensor s = 2.0 * c.mu * e;
  const double lt = c.lambda * e.trace();
  for (int p = 0; p < e.dim(); ++p) s(p, p) += lt;
  return s;
}

SymTensor exp_apply(const IsotropicModuli& c, double eta, double t, const SymTensor& e) {
  check_same_dim(c.dim, e.dim());
  if (!(eta > 0.0)) throw std::invalid_argument("exp_apply: viscosity must be positive");
  if (!(t >= 0.0)) throw std::invalid_argument("exp_apply: time must be nonnegative");
  if (t == 0.0) return e;
  const VolDev vd = vol_dev_split(e);
  return std::exp(-c.bulk_eigenvalue() * t / eta) * vd.vol +
         std::exp(-c.shear_eigenvalue() * t / eta) * vd.dev;
}

double operator_norm(const IsotropicModuli& c) {
  return std::max(std::abs(c.bulk_eigenvalue()), std::abs(c.shear_eigenvalue()));
}

double convexity_margin(const IsotropicModuli& c) {
  return std::min(c.bulk_eigenvalue(), c.shear_eigenvalue());
}

double energy_product(const IsotropicModuli& c, const SymTensor& a, const SymTensor& b) {
  return frobenius(apply_isotropic(c, a), b);
}

}  // namespace visco
