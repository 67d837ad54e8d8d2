#pragma once

// Regular node grids, component-major field storage and summation-by-parts
// difference operators.

#include <array>
#include <cstddef>
#include <vector>

namespace visco {

/// Box of cells[a] cells of size h per axis; nodes sit at origin + i*h,
/// i = 0..cells[a]. Node index is row-major with the last axis fastest.
struct Grid {
  int dim = 2;
  std::array<int, 3> cells{8, 8, 1};
  double h = 1.0;
  std::array<double, 3> origin{0.0, 0.0, 0.0};

  int nodes(int axis) const { return axis < dim ? cells[axis] + 1 : 1; }
  std::size_t size() const;
  /// Stride of one step along axis.
  std::size_t stride(int axis) const;
  std::size_t index(int i, int j, int k = 0) const;
  std::array<int, 3> ijk(std::size_t idx) const;
  std::array<double, 3> coords(std::size_t idx) const;
  bool on_boundary(std::size_t idx) const;
  double extent(int axis) const { return cells[axis] * h; }

  /// Throws std::invalid_argument unless dim is 2 or 3, every axis has >= 8 cells and h > 0.
  void validate() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

using Field = std::vector<double>;
/// One Field per component; vectors have dim components, symmetric tensors
/// sym_size(dim) in packed upper-triangle order.
using MultiField = std::vector<Field>;

MultiField make_field(const Grid& g, int components);

/// First-derivative operator D = H^{-1} Q on n nodes with Q + Q^T = diag(-1, 0, ..., 0, 1).
class Derivative1D {
public:
  Derivative1D() = default;
  Derivative1D(int n, double h, int order);

  int size() const { return n_; }
  int order() const { return order_; }
  /// Diagonal of the norm matrix H, including the factor h.
  double weight(int i) const { return weights_[i]; }

  struct Row {
    int start;
    std::vector<double> coef;  ///< already divided by h
  };
  const Row& row(int i) const { return rows_[i]; }

private:
  int n_ = 0;
  int order_ = 2;
  std::vector<double> weights_;
  std::vector<Row> rows_;
};

/// Face ids: 2*axis for the low face, 2*axis+1 for the high face.
enum Face : int { XLo = 0, XHi = 1, YLo = 2, YHi = 3, ZLo = 4, ZHi = 5 };

class GridOps {
public:
  /// Throws std::invalid_argument when the grid is too small for the stencil order.
  GridOps(const Grid& g, int order);

  const Grid& grid() const { return g_; }
  int order() const { return order_; }
  const Derivative1D& derivative1d(int axis) const { return d_[axis]; }

  /// out = D_axis f.
  void derivative(const Field& f, int axis, Field& out) const;
  /// e_pq = (D_q u_p + D_p u_q) / 2.
  void sym_grad(const MultiField& u, MultiField& e) const;
  /// (div S)_p = sum_q D_q S_pq, plus the boundary correction -H^{-1} B S on every
  /// face flagged in weak_faces. With that correction the operator is the negative
  /// H-adjoint of sym_grad, which imposes S n = 0 there.
  void tensor_div(const MultiField& s, const std::array<bool, 6>& weak_faces, MultiField& out) const;
  void div(const MultiField& u, Field& out) const;
  /// d=2: one component (d_x u_y - d_y u_x); d=3: three components.
  void curl(const MultiField& u, MultiField& out) const;

  /// Product of the per-axis norm weights: the discrete inner-product weight of a node.
  double norm_weight(std::size_t idx) const;
  const Field& norm_weights() const { return hw_; }

private:
  Grid g_;
  int order_;
  std::array<Derivative1D, 3> d_;
  Field hw_;
  mutable Field scratch_;
};

}  // namespace visco
