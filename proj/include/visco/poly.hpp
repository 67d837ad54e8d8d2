#pragma once

// Multivariate polynomials in up to three variables with exact (mpq_class) or
// floating (double) coefficients, plus the vector calculus needed to check
// identities for manufactured displacement and coefficient fields.

#include <gmpxx.h>

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace visco {

class DegreeOverflow : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using Exponent = std::array<std::uint8_t, 3>;

inline int total_degree(const Exponent& e) { return e[0] + e[1] + e[2]; }

template <class T>
class BasicPoly {
public:
  static constexpr int kDefaultMaxDegree = 8;

  explicit BasicPoly(int dim = 3, int max_degree = kDefaultMaxDegree) : dim_(dim), max_degree_(max_degree) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("polynomial dimension must be 1..3");
  }

  static BasicPoly constant(int dim, const T& c) { return monomial(dim, Exponent{0, 0, 0}, c); }

  static BasicPoly variable(int dim, int axis) {
    check_axis(dim, axis);
    Exponent e{0, 0, 0};
    e[axis] = 1;
    return monomial(dim, e, T(1));
  }

  static BasicPoly monomial(int dim, const Exponent& e, const T& c) {
    BasicPoly p(dim);
    p.add_term(e, c);
    return p;
  }

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exponent, T>& terms() const { return terms_; }

  int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, total_degree(e));
    return d;
  }

  T coefficient(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? T(0) : it->second;
  }

  /// Adds c x^e, dropping the term if it cancels to zero.
  void add_term(const Exponent& e, const T& c) {
    for (int a = dim_; a < 3; ++a)
      if (e[a] != 0) throw std::invalid_argument("exponent uses an axis beyond the polynomial dimension");
    if (total_degree(e) > max_degree_)
      throw DegreeOverflow("polynomial degree " + std::to_string(total_degree(e)) + " exceeds cap " +
                           std::to_string(max_degree_));
    if (c == T(0)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == T(0)) terms_.erase(it);
    }
  }

  BasicPoly& operator+=(const BasicPoly& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  BasicPoly& operator-=(const BasicPoly& o) {
    check_dim(o);
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  BasicPoly& operator*=(const T& s) {
    if (s == T(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend BasicPoly operator+(BasicPoly a, const BasicPoly& b) { return a += b; }
  friend BasicPoly operator-(BasicPoly a, const BasicPoly& b) { return a -= b; }
  friend BasicPoly operator-(BasicPoly a) { return a *= T(-1); }
  friend BasicPoly operator*(BasicPoly a, const T& s) { return a *= s; }
  friend BasicPoly operator*(const T& s, BasicPoly a) { return a *= s; }

  friend BasicPoly operator*(const BasicPoly& a, const BasicPoly& b) {
    a.check_dim(b);
    BasicPoly r(a.dim_, std::max(a.max_degree_, b.max_degree_));
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponent e{};
        for (int k = 0; k < 3; ++k) e[k] = static_cast<std::uint8_t>(ea[k] + eb[k]);
        r.add_term(e, ca * cb);
      }
    return r;
  }
  BasicPoly& operator*=(const BasicPoly& o) { return *this = *this * o; }

  friend bool operator==(const BasicPoly& a, const BasicPoly& b) { return a.dim_ == b.dim_ && a.terms_ == b.terms_; }

  /// Value at a point; powers are built incrementally so rationals stay exact.
  T evaluate(const std::vector<T>& x) const {
    if (static_cast<int>(x.size()) != dim_) throw std::invalid_argument("evaluation point has wrong dimension");
    std::array<std::vector<T>, 3> pw;
    for (int a = 0; a < dim_; ++a) {
      pw[a].assign(max_degree_ + 1, T(1));
      for (int k = 1; k <= max_degree_; ++k) pw[a][k] = pw[a][k - 1] * x[a];
    }
    T s(0);
    for (const auto& [e, c] : terms_) {
      T m = c;
      for (int a = 0; a < dim_; ++a) m *= pw[a][e[a]];
      s += m;
    }
    return s;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    static const char* names[] = {"x", "y", "z"};
    bool first = true;
    for (const auto& [e, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << "(" << c << ")";
      for (int a = 0; a < dim_; ++a)
        if (e[a]) os << "*" << names[a] << (e[a] > 1 ? "^" + std::to_string(e[a]) : "");
    }
    return os.str();
  }

  static void check_axis(int dim, int axis) {
    if (axis < 0 || axis >= dim) throw std::out_of_range("axis " + std::to_string(axis) + " out of range");
  }
  void check_dim(const BasicPoly& o) const {
    if (o.dim_ != dim_) throw std::invalid_argument("polynomial dimension mismatch");
  }

private:
  int dim_;
  int max_degree_;
  std::map<Exponent, T> terms_;
};

using Poly = BasicPoly<mpq_class>;
using FPoly = BasicPoly<double>;

template <class T>
using BasicPolyVec = std::vector<BasicPoly<T>>;
template <class T>
using BasicPolyMat = std::vector<std::vector<BasicPoly<T>>>;

using PolyVec = BasicPolyVec<mpq_class>;
using PolyMat = BasicPolyMat<mpq_class>;

template <class T>
BasicPoly<T> differentiate(const BasicPoly<T>& p, int axis) {
  BasicPoly<T>::check_axis(p.dim(), axis);
  BasicPoly<T> r(p.dim(), p.max_degree());
  for (const auto& [e, c] : p.terms()) {
    if (e[axis] == 0) continue;
    Exponent d = e;
    --d[axis];
    r.add_term(d, c * T(static_cast<int>(e[axis])));
  }
  return r;
}

namespace poly_detail {
template <class T>
int common_dim(const BasicPolyVec<T>& u) {
  if (u.empty()) throw std::invalid_argument("empty polynomial vector");
  for (const auto& c : u)
    if (c.dim() != u[0].dim()) throw std::invalid_argument("polynomial vector components differ in dimension");
  return u[0].dim();
}
}  // namespace poly_detail

template <class T>
BasicPolyVec<T> grad(const BasicPoly<T>& f) {
  BasicPolyVec<T> g;
  for (int a = 0; a < f.dim(); ++a) g.push_back(differentiate(f, a));
  return g;
}

template <class T>
BasicPoly<T> div(const BasicPolyVec<T>& u) {
  const int d = poly_detail::common_dim(u);
  if (static_cast<int>(u.size()) != d) throw std::invalid_argument("div needs as many components as variables");
  BasicPoly<T> s(d);
  for (int a = 0; a < d; ++a) s += differentiate(u[a], a);
  return s;
}

template <class T>
BasicPolyVec<T> curl(const BasicPolyVec<T>& u) {
  const int d = poly_detail::common_dim(u);
  if (d != 3 || u.size() != 3) throw std::invalid_argument("curl is only defined for 3-component fields in 3D");
  return {differentiate(u[2], 1) - differentiate(u[1], 2), differentiate(u[0], 2) - differentiate(u[2], 0),
          differentiate(u[1], 0) - differentiate(u[0], 1)};
}

template <class T>
BasicPoly<T> laplacian(const BasicPoly<T>& f) {
  BasicPoly<T> s(f.dim(), f.max_degree());
  for (int a = 0; a < f.dim(); ++a) s += differentiate(differentiate(f, a), a);
  return s;
}

template <class T>
BasicPolyVec<T> laplacian(const BasicPolyVec<T>& u) {
  BasicPolyVec<T> r;
  for (const auto& c : u) r.push_back(laplacian(c));
  return r;
}

/// e_ij = (d_j u_i + d_i u_j) / 2.
template <class T>
BasicPolyMat<T> sym_grad(const BasicPolyVec<T>& u) {
  const int d = poly_detail::common_dim(u);
  BasicPolyMat<T> e(d, BasicPolyVec<T>(d, BasicPoly<T>(d)));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) e[i][j] = (differentiate(u[i], j) + differentiate(u[j], i)) * (T(1) / T(2));
  return e;
}

/// (div M)_i = sum_j d_j M_ij.
template <class T>
BasicPolyVec<T> tensor_div(const BasicPolyMat<T>& m) {
  const int d = static_cast<int>(m.size());
  BasicPolyVec<T> r(d, BasicPoly<T>(m[0][0].dim()));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) r[i] += differentiate(m[i][j], j);
  return r;
}

template <class T>
BasicPoly<T> dot(const BasicPolyVec<T>& a, const BasicPolyVec<T>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot of vectors of different length");
  BasicPoly<T> s(a.at(0).dim());
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template <class T>
BasicPolyVec<T> cross(const BasicPolyVec<T>& a, const BasicPolyVec<T>& b) {
  if (a.size() != 3 || b.size() != 3) throw std::invalid_argument("cross needs 3-vectors");
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

template <class T>
BasicPolyVec<T> operator+(BasicPolyVec<T> a, const BasicPolyVec<T>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

template <class T>
BasicPolyVec<T> operator-(BasicPolyVec<T> a, const BasicPolyVec<T>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("vector length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
  return a;
}

template <class T>
BasicPolyVec<T> operator*(const BasicPoly<T>& f, BasicPolyVec<T> a) {
  for (auto& c : a) c = f * c;
  return a;
}

template <class T>
BasicPolyVec<T> operator*(const T& s, BasicPolyVec<T> a) {
  for (auto& c : a) c *= s;
  return a;
}

template <class T>
bool all_zero(const BasicPolyVec<T>& a) {
  for (const auto& c : a)
    if (!c.is_zero()) return false;
  return true;
}

/// Coefficient-wise conversion of an exact polynomial to doubles.
inline FPoly to_float(const Poly& p) {
  FPoly r(p.dim(), p.max_degree());
  for (const auto& [e, c] : p.terms()) r.add_term(e, c.get_d());
  return r;
}

inline BasicPolyVec<double> to_float(const PolyVec& u) {
  BasicPolyVec<double> r;
  for (const auto& c : u) r.push_back(to_float(c));
  return r;
}

/// Random polynomial of total degree <= degree with small rational coefficients
/// num/den, |num| <= 9, den in 1..4. Each monomial is kept with probability `density`.
inline Poly random_poly(std::mt19937_64& rng, int dim, int degree, double density = 0.7) {
  std::uniform_int_distribution<int> num(-9, 9), den(1, 4);
  std::bernoulli_distribution keep(density);
  Poly p(dim);
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; b <= (dim > 1 ? degree - a : 0); ++b)
      for (int c = 0; c <= (dim > 2 ? degree - a - b : 0); ++c) {
        if (!keep(rng)) continue;
        mpq_class q(num(rng), den(rng));
        q.canonicalize();
        p.add_term(Exponent{static_cast<std::uint8_t>(a), static_cast<std::uint8_t>(b), static_cast<std::uint8_t>(c)},
                   q);
      }
  return p;
}

inline PolyVec random_polyvec(std::mt19937_64& rng, int dim, int degree, double density = 0.7) {
  PolyVec u;
  for (int i = 0; i < dim; ++i) u.push_back(random_poly(rng, dim, degree, density));
  return u;
}

}  // namespace visco
