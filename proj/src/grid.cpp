#include "visco/grid.hpp"

#include <stdexcept>
#include <string>

#include "visco/tensor.hpp"

namespace visco {

std::size_t Grid::size() const {
  std::size_t n = 1;
  for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(nodes(a));
  return n;
}

std::size_t Grid::stride(int axis) const {
  std::size_t s = 1;
  for (int a = dim - 1; a > axis; --a) s *= static_cast<std::size_t>(nodes(a));
  return s;
}

std::size_t Grid::index(int i, int j, int k) const {
  if (dim == 2) return static_cast<std::size_t>(i) * nodes(1) + j;
  return (static_cast<std::size_t>(i) * nodes(1) + j) * nodes(2) + k;
}

std::array<int, 3> Grid::ijk(std::size_t idx) const {
  std::array<int, 3> r{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    r[a] = static_cast<int>(idx % nodes(a));
    idx /= nodes(a);
  }
  return r;
}

std::array<double, 3> Grid::coords(std::size_t idx) const {
  const auto ix = ijk(idx);
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim; ++a) x[a] = origin[a] + ix[a] * h;
  return x;
}

bool Grid::on_boundary(std::size_t idx) const {
  const auto ix = ijk(idx);
  for (int a = 0; a < dim; ++a)
    if (ix[a] == 0 || ix[a] == cells[a]) return true;
  return false;
}

void Grid::validate() const {
  if (dim != 2 && dim != 3) throw std::invalid_argument("grid.dim must be 2 or 3");
  for (int a = 0; a < dim; ++a)
    if (cells[a] < 8) throw std::invalid_argument("grid.shape[" + std::to_string(a) + "] must be >= 8 cells");
  if (!(h > 0.0)) throw std::invalid_argument("grid.spacing must be positive");
}

MultiField make_field(const Grid& g, int components) { return MultiField(components, Field(g.size(), 0.0)); }

Derivative1D::Derivative1D(int n, double h, int order) : n_(n), order_(order), weights_(n, h), rows_(n) {
  if (order == 2) {
    if (n < 3) throw std::invalid_argument("second-order stencil needs at least 3 nodes per axis");
    weights_[0] = weights_[n - 1] = 0.5 * h;
    rows_[0] = {0, {-1.0, 1.0}};
    for (int i = 1; i < n - 1; ++i) rows_[i] = {i - 1, {-0.5, 0.0, 0.5}};
    rows_[n - 1] = {n - 2, {-1.0, 1.0}};
  } else if (order == 4) {
    if (n < 9) throw std::invalid_argument("fourth-order stencil needs at least 9 nodes per axis");
    const double hw[4] = {17.0 / 48, 59.0 / 48, 43.0 / 48, 49.0 / 48};
    const std::vector<double> closure[4] = {
        {-24.0 / 17, 59.0 / 34, -4.0 / 17, -3.0 / 34},
        {-0.5, 0.0, 0.5},
        {4.0 / 43, -59.0 / 86, 0.0, 59.0 / 86, -4.0 / 43},
        {3.0 / 98, 0.0, -59.0 / 98, 0.0, 32.0 / 49, -4.0 / 49},
    };
    for (int i = 0; i < 4; ++i) {
      weights_[i] = weights_[n - 1 - i] = hw[i] * h;
      rows_[i] = {0, closure[i]};
      // Mirror: D_{n-1-i, n-1-j} = -D_{i,j}.
      std::vector<double> mirrored(closure[i].rbegin(), closure[i].rend());
      for (double& c : mirrored) c = -c;
      rows_[n - 1 - i] = {n - static_cast<int>(closure[i].size()), mirrored};
    }
    for (int i = 4; i < n - 4; ++i) rows_[i] = {i - 2, {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}};
  } else {
    throw std::invalid_argument("difference order must be 2 or 4");
  }
  for (auto& r : rows_)
    for (double& c : r.coef) c /= h;
}

GridOps::GridOps(const Grid& g, int order) : g_(g), order_(order) {
  g_.validate();
  for (int a = 0; a < g_.dim; ++a) d_[a] = Derivative1D(g_.nodes(a), g_.h, order);
  hw_.assign(g_.size(), 1.0);
  for (std::size_t idx = 0; idx < g_.size(); ++idx) {
    const auto ix = g_.ijk(idx);
    double w = 1.0;
    for (int a = 0; a < g_.dim; ++a) w *= d_[a].weight(ix[a]);
    hw_[idx] = w;
  }
  scratch_.assign(g_.size(), 0.0);
}

void GridOps::derivative(const Field& f, int axis, Field& out) const {
  const std::size_t n = g_.nodes(axis), inner = g_.stride(axis), outer = g_.size() / (n * inner);
  out.resize(f.size());
  const Derivative1D& d = d_[axis];
#pragma omp parallel for schedule(static)
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& row = d.row(static_cast<int>(i));
      double* dst = &out[(o * n + i) * inner];
      const double* src = &f[(o * n + row.start) * inner];
      for (std::size_t in = 0; in < inner; ++in) dst[in] = 0.0;
      for (std::size_t k = 0; k < row.coef.size(); ++k) {
        const double c = row.coef[k];
        if (c == 0.0) continue;
        const double* s = src + k * inner;
        for (std::size_t in = 0; in < inner; ++in) dst[in] += c * s[in];
      }
    }
  }
}

void GridOps::sym_grad(const MultiField& u, MultiField& e) const {
  const int d = g_.dim;
  e.resize(sym_size(d));
  for (auto& c : e) c.assign(g_.size(), 0.0);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      derivative(u[p], q, scratch_);
      Field& dst = e[SymTensor::packed_index(d, p, q)];
      const double w = p == q ? 1.0 : 0.5;
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * scratch_[i];
    }
}

void GridOps::tensor_div(const MultiField& s, const std::array<bool, 6>& weak_faces, MultiField& out) const {
  const int d = g_.dim;
  out.resize(d);
  for (auto& c : out) c.assign(g_.size(), 0.0);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q) {
      const Field& spq = s[SymTensor::packed_index(d, p, q)];
      derivative(spq, q, scratch_);
      Field& dst = out[p];
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scratch_[i];
      // Boundary correction on the two faces normal to q.
      const std::size_t n = g_.nodes(q), inner = g_.stride(q), outer = g_.size() / (n * inner);
      for (int side = 0; side < 2; ++side) {
        if (!weak_faces[2 * q + side]) continue;
        const std::size_t i = side == 0 ? 0 : n - 1;
        const double c = (side == 0 ? 1.0 : -1.0) / d_[q].weight(static_cast<int>(i));
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t idx = (o * n + i) * inner + in;
            dst[idx] += c * spq[idx];
          }
      }
    }
}

void GridOps::div(const MultiField& u, Field& out) const {
  out.assign(g_.size(), 0.0);
  for (int a = 0; a < g_.dim; ++a) {
    derivative(u[a], a, scratch_);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += scratch_[i];
  }
}

void GridOps::curl(const MultiField& u, MultiField& out) const {
  Field t1(g_.size()), t2(g_.size());
  if (g_.dim == 2) {
    out.assign(1, Field(g_.size()));
    derivative(u[1], 0, t1);
    derivative(u[0], 1, t2);
    for (std::size_t i = 0; i < t1.size(); ++i) out[0][i] = t1[i] - t2[i];
    return;
  }
  out.assign(3, Field(g_.size()));
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    derivative(u[b], a, t1);
    derivative(u[a], b, t2);
    for (std::size_t i = 0; i < t1.size(); ++i) out[k][i] = t1[i] - t2[i];
  }
}

double GridOps::norm_weight(std::size_t idx) const { return hw_[idx]; }

}  // namespace visco
