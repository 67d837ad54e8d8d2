#include <doctest.h>

#include <algorithm>
#include <random>

#include "visco/poly.hpp"

using namespace visco;

namespace {

Poly X(int d = 3) { return Poly::variable(d, 0); }
Poly Y(int d = 3) { return Poly::variable(d, 1); }
Poly Z(int d = 3) { return Poly::variable(d, 2); }
Poly C(long n, int d = 3) { return Poly::constant(d, mpq_class(n)); }

Exponent ex(int a, int b, int c) {
  return {static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(c)};
}

// (x+y)^n written out from binomial coefficients, never through multiplication.
Poly binomial_expansion(int n, const mpq_class& scale) {
  Poly p(3);
  long binom = 1;
  for (int k = 0; k <= n; ++k) {
    p.add_term(ex(n - k, k, 0), scale * binom);
    binom = binom * (n - k) / (k + 1);
  }
  return p;
}

}  // namespace

TEST_CASE("differentiate") {
  CHECK(differentiate(X() * X() * Y(), 0) == C(2) * X() * Y());
  CHECK(differentiate(C(7), 2).is_zero());

  const Poly s = X() + Y();
  const Poly cube = s * s * s;
  CHECK(cube == binomial_expansion(3, 1));
  CHECK(differentiate(cube, 0) == binomial_expansion(2, 3));

  CHECK_THROWS_AS(differentiate(X(2), 2), std::out_of_range);
  CHECK_THROWS_AS(differentiate(X(), -1), std::out_of_range);
}

TEST_CASE("evaluate") {
  const std::vector<mpq_class> pt{2, 3, 0};
  CHECK((X() * X() * Y()).evaluate(pt) == 12);
  CHECK(Poly(3).evaluate({mpq_class(1, 3), 5, -2}) == 0);
  const Poly s = X() + Y();
  CHECK((s * s * s).evaluate({1, 1, 0}) == 8);
  CHECK(binomial_expansion(3, 1).evaluate({1, 1, 0}) == 8);
  CHECK_THROWS_AS(X().evaluate({1, 2}), std::invalid_argument);
}

TEST_CASE("vector operations on simple fields") {
  const PolyVec u{X() * X(), C(0), C(0)};
  CHECK(div(u) == C(2) * X());
  CHECK(all_zero(curl(u)));
  const PolyVec lap = laplacian(u);
  CHECK(lap[0] == C(2));
  CHECK(lap[1].is_zero());
  CHECK(lap[2].is_zero());

  CHECK(all_zero(curl(grad(X() * Y() * Z()))));

  const PolyVec planar{X(2) * Y(2), Y(2)};
  CHECK_THROWS_AS(curl(planar), std::invalid_argument);

  const PolyMat e = sym_grad(PolyVec{Y(), C(0), C(0)});
  CHECK(e[0][1] == C(1) * mpq_class(1, 2));
  CHECK(e[1][0] == e[0][1]);
  CHECK(e[0][0].is_zero());
}

TEST_CASE("vector Laplacian identity on random cubics") {
  std::mt19937_64 rng(2024);
  for (int k = 0; k < 20; ++k) {
    const PolyVec u = random_polyvec(rng, 3, 3);
    const PolyVec rhs = grad(div(u)) - curl(curl(u));
    CHECK(laplacian(u) == rhs);
  }
}

TEST_CASE("Leibniz rule and nilpotent compositions") {
  std::mt19937_64 rng(99);
  for (int k = 0; k < 20; ++k) {
    const Poly p = random_poly(rng, 3, 3), q = random_poly(rng, 3, 3);
    for (int a = 0; a < 3; ++a) CHECK(differentiate(p * q, a) == p * differentiate(q, a) + q * differentiate(p, a));
    const PolyVec u = random_polyvec(rng, 3, 4);
    CHECK(div(curl(u)).is_zero());
    CHECK(all_zero(curl(grad(p))));
  }
}

TEST_CASE("canonical form") {
  std::mt19937_64 rng(5);
  const Poly p = random_poly(rng, 3, 4);

  // Rebuilding from shuffled terms, and adding then removing a term, gives the same map.
  std::vector<std::pair<Exponent, mpq_class>> terms(p.terms().begin(), p.terms().end());
  std::shuffle(terms.begin(), terms.end(), rng);
  Poly rebuilt(3);
  for (const auto& [e, c] : terms) rebuilt.add_term(e, c);
  CHECK(rebuilt == p);
  rebuilt.add_term(ex(1, 1, 1), 3);
  rebuilt.add_term(ex(1, 1, 1), -3);
  CHECK(rebuilt == p);
  CHECK((p - p).terms().empty());
  CHECK(p + Poly(3) == p);
  for (const auto& [e, c] : p.terms()) CHECK(c != 0);
}

TEST_CASE("degree cap") {
  Poly x4 = X() * X() * X() * X();
  CHECK((x4 * x4).degree() == 8);
  CHECK_THROWS_AS(x4 * x4 * X(), DegreeOverflow);
  Poly small(3, 2);
  CHECK_THROWS_AS(small.add_term(ex(0, 0, 3), 1), DegreeOverflow);
}

TEST_CASE("float path agrees with exact evaluation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int k = 0; k < 20; ++k) {
    const Poly p = random_poly(rng, 3, 4);
    const FPoly f = to_float(p);
    const std::vector<double> x{u(rng), u(rng), u(rng)};
    const mpq_class exact = p.evaluate({mpq_class(x[0]), mpq_class(x[1]), mpq_class(x[2])});
    CHECK(f.evaluate(x) == doctest::Approx(exact.get_d()).epsilon(1e-12));
  }
}

TEST_CASE("two-dimensional polynomials") {
  const Poly x = X(2), y = Y(2);
  const PolyVec u{x * y, y * y};
  CHECK(div(u) == C(3, 2) * y);
  CHECK(laplacian(x * x * y) == C(2, 2) * y);
  CHECK_THROWS_AS(x + X(3), std::invalid_argument);
}
