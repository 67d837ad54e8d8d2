#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "visco/tensor.hpp"

using namespace visco;

namespace {

oracle::Dense2 to_dense(const SymTensor& t) {
  oracle::Dense2 d{};
  for (int p = 0; p < t.dim(); ++p)
    for (int q = 0; q < t.dim(); ++q) d[p][q] = t(p, q);
  return d;
}

SymTensor random_tensor(std::mt19937_64& rng, int dim) {
  const auto d = oracle::random_sym(rng, dim);
  SymTensor t(dim);
  for (int p = 0; p < dim; ++p)
    for (int q = p; q < dim; ++q) t(p, q) = d[p][q];
  return t;
}

double max_abs_diff(const SymTensor& a, const oracle::Dense2& b) {
  double m = 0.0;
  for (int p = 0; p < a.dim(); ++p)
    for (int q = 0; q < a.dim(); ++q) m = std::max(m, std::abs(a(p, q) - b[p][q]));
  return m;
}

}  // namespace

TEST_CASE("packed storage is symmetric by construction") {
  SymTensor t(3);
  t(0, 2) = 4.0;
  CHECK(t(2, 0) == 4.0);
  CHECK(SymTensor::packed_index(3, 2, 2) == 5);
  CHECK(SymTensor::packed_index(2, 1, 1) == 2);
  CHECK_THROWS_AS(SymTensor(4), std::invalid_argument);
}

TEST_CASE("apply_isotropic") {
  CHECK(apply_isotropic({2.0, 1.0, 3}, SymTensor::identity(3)) == 8.0 * SymTensor::identity(3));

  std::mt19937_64 rng(7);
  const SymTensor e = random_tensor(rng, 3);
  const SymTensor s = apply_isotropic({0.0, 0.5, 3}, e);
  for (int i = 0; i < 6; ++i) CHECK(s[i] == doctest::Approx(e[i]).epsilon(1e-15));

  // Dense delta-product contraction as the reference.
  const SymTensor r = apply_isotropic({1.0, 1.0, 3}, SymTensor::diag(1, 2, 3));
  const auto ref = oracle::contract(oracle::isotropic_dense(1.0, 1.0, 3), to_dense(SymTensor::diag(1, 2, 3)), 3);
  CHECK(max_abs_diff(r, ref) < 1e-14);
  CHECK(r == SymTensor::diag(8, 10, 12));

  CHECK_THROWS_AS(apply_isotropic({1.0, 1.0, 2}, SymTensor::identity(3)), std::invalid_argument);
}

TEST_CASE("apply_isotropic matches dense contraction on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int dim : {2, 3}) {
    for (int k = 0; k < 50; ++k) {
      const double lambda = u(rng), mu = u(rng);
      const SymTensor e = random_tensor(rng, dim);
      const auto ref = oracle::contract(oracle::isotropic_dense(lambda, mu, dim), to_dense(e), dim);
      CHECK(max_abs_diff(apply_isotropic({lambda, mu, dim}, e), ref) < 1e-12);
    }
  }
}

TEST_CASE("vol_dev_split") {
  auto [v, d] = vol_dev_split(SymTensor::diag(1, 2, 3));
  CHECK(v == 2.0 * SymTensor::identity(3));
  CHECK(d == SymTensor::diag(-1, 0, 1));

  auto [vi, di] = vol_dev_split(SymTensor::identity(3));
  CHECK(vi == SymTensor::identity(3));
  CHECK(di == SymTensor::zero(3));

  std::mt19937_64 rng(3);
  for (int dim : {2, 3}) {
    for (int k = 0; k < 100; ++k) {
      const SymTensor e = random_tensor(rng, dim);
      const auto [ev, ed] = vol_dev_split(e);
      CHECK(std::abs(frobenius(ev, ed)) < 1e-13);
      CHECK(std::abs(ed.trace()) < 1e-14);
      const SymTensor back = ev + ed;
      for (int i = 0; i < sym_size(dim); ++i) CHECK(back[i] == doctest::Approx(e[i]).epsilon(1e-15));
    }
  }
}

TEST_CASE("spectral form and major symmetry") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 4.0);
  for (int dim : {2, 3}) {
    for (int k = 0; k < 100; ++k) {
      const IsotropicModuli c{u(rng) - 0.05 * dim, u(rng), dim};
      const SymTensor a = random_tensor(rng, dim), b = random_tensor(rng, dim);
      const double ab = energy_product(c, a, b), ba = energy_product(c, b, a);
      CHECK(std::abs(ab - ba) <= 1e-13 * (1.0 + std::abs(ab)));
      const auto [av, ad] = vol_dev_split(a);
      const SymTensor spectral = c.bulk_eigenvalue() * av + c.shear_eigenvalue() * ad;
      const SymTensor direct = apply_isotropic(c, a);
      for (int i = 0; i < sym_size(dim); ++i) CHECK(std::abs(direct[i] - spectral[i]) < 1e-12 * (1 + std::abs(direct[i])));
    }
  }
}

TEST_CASE("exp_apply against series exponential") {
  std::mt19937_64 rng(13);
  const SymTensor e = random_tensor(rng, 3);
  const IsotropicModuli shear{0.0, 0.5, 3};
  const SymTensor half = exp_apply(shear, 1.0, std::log(2.0), e);
  const auto ref = oracle::series_exp_apply(oracle::isotropic_dense(0.0, 0.5, 3), 3, std::log(2.0), to_dense(e));
  CHECK(max_abs_diff(half, ref) < 1e-12);
  for (int i = 0; i < 6; ++i) CHECK(half[i] == doctest::Approx(0.5 * e[i]).epsilon(1e-13));

  const SymTensor r = exp_apply({1.0, 1.0, 3}, 2.0, 1.0, SymTensor::identity(3));
  const auto ref2 = oracle::series_exp_apply(oracle::isotropic_dense(1.0, 1.0, 3), 3, 0.5, to_dense(SymTensor::identity(3)));
  CHECK(max_abs_diff(r, ref2) < 1e-12);
  CHECK(r(0, 0) == doctest::Approx(std::exp(-2.5)).epsilon(1e-14));
  CHECK(r(0, 1) == 0.0);

  CHECK(exp_apply({3.0, 0.7, 3}, 1.3, 0.0, e) == e);
  CHECK_THROWS_AS(exp_apply(shear, 0.0, 1.0, e), std::invalid_argument);
  CHECK_THROWS_AS(exp_apply(shear, -1.0, 1.0, e), std::invalid_argument);
  CHECK_THROWS_AS(exp_apply(shear, 1.0, -0.1, e), std::invalid_argument);
}

TEST_CASE("exp_apply random cases against series and semigroup law") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int dim : {2, 3}) {
    for (int k = 0; k < 30; ++k) {
      const IsotropicModuli c{u(rng), u(rng), dim};
      const double eta = u(rng), t = u(rng), s = u(rng);
      const SymTensor e = random_tensor(rng, dim);
      const auto ref = oracle::series_exp_apply(oracle::isotropic_dense(c.lambda, c.mu, dim), dim, t / eta, to_dense(e));
      CHECK(max_abs_diff(exp_apply(c, eta, t, e), ref) < 1e-11);

      const SymTensor once = exp_apply(c, eta, t + s, e);
      const SymTensor twice = exp_apply(c, eta, t, exp_apply(c, eta, s, e));
      const double scale = std::sqrt(frobenius_norm2(once));
      CHECK(std::sqrt(frobenius_norm2(once - twice)) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("operator_norm against brute-force supremum") {
  CHECK(operator_norm({0.0, 0.5, 3}) == 1.0);
  CHECK(operator_norm({1.0, 1.0, 2}) == 4.0);

  const double n1 = oracle::brute_force_rayleigh(oracle::isotropic_dense(1.0, 1.0, 3), 3, +1, 101);
  CHECK(std::abs(n1 - 5.0) <= 1e-6 * 5.0);
  CHECK(operator_norm({1.0, 1.0, 3}) == 5.0);

  const double n2 = oracle::brute_force_rayleigh(oracle::isotropic_dense(2.0, 1.0, 3), 3, +1, 102);
  CHECK(std::abs(n2 - 8.0) <= 1e-6 * 8.0);
  CHECK(operator_norm({2.0, 1.0, 3}) == 8.0);
}

TEST_CASE("operator_norm bounds every sampled quotient") {
  std::mt19937_64 rng(19);
  const IsotropicModuli c{1.7, 0.4, 3};
  const auto dense = oracle::isotropic_dense(c.lambda, c.mu, 3);
  for (int k = 0; k < 2000; ++k) {
    const auto z = oracle::random_sym(rng, 3);
    const double q = oracle::frob(oracle::contract(dense, z, 3), z, 3) / oracle::frob(z, z, 3);
    CHECK(std::abs(q) <= operator_norm(c) * (1 + 1e-14));
    CHECK(q >= convexity_margin(c) * (1 - 1e-14));
  }
}

TEST_CASE("convexity_margin") {
  CHECK(convexity_margin({-0.5, 1.0, 3}) == 0.5);
  CHECK(convexity_margin({1.0, 1.0, 3}) == 2.0);
  // 3*(-1) + 2*1 = -1 is the volumetric eigenvalue, so this tensor is not convex.
  CHECK(convexity_margin({-1.0, 1.0, 3}) == -1.0);
  const double inf = oracle::brute_force_rayleigh(oracle::isotropic_dense(-1.0, 1.0, 3), 3, -1, 103);
  CHECK(std::abs(inf + 1.0) <= 1e-6);
  const double inf2 = oracle::brute_force_rayleigh(oracle::isotropic_dense(-0.5, 1.0, 3), 3, -1, 104);
  CHECK(std::abs(inf2 - 0.5) <= 1e-6 * 0.5);
  CHECK(IsotropicModuli{-0.5, 1.0, 3}.is_strongly_convex());
  CHECK_FALSE(IsotropicModuli{-1.0, 0.5, 3}.is_strongly_convex());
  CHECK_FALSE(IsotropicModuli{1.0, 0.0, 2}.is_strongly_convex());
}
