#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/linalg.hpp"

namespace deflate {

/// Structured grid of interior nodes on an interval or a rectangle.
/// Boundary nodes are not unknowns; spacing per axis is (hi - lo) / (n + 1).
class Grid {
 public:
  enum class Kind { Interval, Rectangle };

  static Grid interval(double a, double b, std::size_t n) { return Grid(Kind::Interval, {a, 0}, {b, 0}, {n, 1}); }

  static Grid rectangle(double a, double b, double c, double d, std::size_t nx, std::size_t ny) {
    return Grid(Kind::Rectangle, {a, c}, {b, d}, {nx, ny});
  }

  /// One unknown with unit spacing, for scalar problems.
  static Grid scalar() { return interval(0.0, 2.0, 1); }

  Kind kind() const { return kind_; }
  int dim() const { return kind_ == Kind::Interval ? 1 : 2; }
  std::size_t n(int axis) const { return n_[static_cast<std::size_t>(axis)]; }
  double lo(int axis) const { return lo_[static_cast<std::size_t>(axis)]; }
  double hi(int axis) const { return hi_[static_cast<std::size_t>(axis)]; }
  double h(int axis) const { return (hi(axis) - lo(axis)) / static_cast<double>(n(axis) + 1); }

  std::size_t size() const { return n_[0] * n_[1]; }

  /// Cell volume: h in 1D, hx * hy in 2D.
  double cell_volume() const { return dim() == 1 ? h(0) : h(0) * h(1); }

  /// Index of node (i, j), x fastest.
  std::size_t index(std::size_t i, std::size_t j = 0) const { return i + n_[0] * j; }

  double x(std::size_t i) const { return lo(0) + static_cast<double>(i + 1) * h(0); }
  double y(std::size_t j) const { return lo(1) + static_cast<double>(j + 1) * h(1); }

  /// Node values of f(x) or f(x, y).
  Vector sample(const std::function<double(double, double)>& f) const {
    Vector v(size());
    for (std::size_t j = 0; j < n_[1]; ++j)
      for (std::size_t i = 0; i < n_[0]; ++i) v[index(i, j)] = f(x(i), dim() == 2 ? y(j) : 0.0);
    return v;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  Grid(Kind kind, std::array<double, 2> lo, std::array<double, 2> hi, std::array<std::size_t, 2> n)
      : kind_(kind), lo_(lo), hi_(hi), n_(n) {
    for (int a = 0; a < dim(); ++a) {
      if (n_[static_cast<std::size_t>(a)] < 1) throw UsageError("Grid: need at least one interior node");
      if (!(hi_[static_cast<std::size_t>(a)] > lo_[static_cast<std::size_t>(a)]))
        throw UsageError("Grid: empty extent");
    }
  }

  Kind kind_;
  std::array<double, 2> lo_;
  std::array<double, 2> hi_;
  std::array<std::size_t, 2> n_;
};

/// Constant Dirichlet values per face. In 1D only left/right are used.
struct DirichletData {
  double left = 0.0;    // x = lo(0)
  double right = 0.0;   // x = hi(0)
  double bottom = 0.0;  // y = lo(1)
  double top = 0.0;     // y = hi(1)

  static DirichletData homogeneous() { return {}; }
  friend bool operator==(const DirichletData&, const DirichletData&) = default;
};

/// A discrete function: node values over the interior of a grid.
struct Field {
  Grid grid;
  Vector values;
  DirichletData boundary;

  Field(Grid g, Vector v, DirichletData bc = {}) : grid(g), values(std::move(v)), boundary(bc) {
    if (values.size() != grid.size()) throw UsageError("Field: value count does not match grid");
  }
};

/// 3-point (1D) or 5-point (2D) Laplacian with boundary nodes eliminated.
inline CsrMatrix laplacian_matrix(const Grid& g) {
  std::vector<Triplet> t;
  const std::size_t nx = g.n(0);
  const std::size_t ny = g.dim() == 2 ? g.n(1) : 1;
  t.reserve(g.size() * (g.dim() == 2 ? 5 : 3));
  const double cx = 1.0 / (g.h(0) * g.h(0));
  const double cy = g.dim() == 2 ? 1.0 / (g.h(1) * g.h(1)) : 0.0;
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t r = g.index(i, j);
      if (g.dim() == 2 && j > 0) t.push_back({r, g.index(i, j - 1), cy});
      if (i > 0) t.push_back({r, g.index(i - 1, j), cx});
      t.push_back({r, r, -2.0 * cx - 2.0 * cy});
      if (i + 1 < nx) t.push_back({r, g.index(i + 1, j), cx});
      if (g.dim() == 2 && j + 1 < ny) t.push_back({r, g.index(i, j + 1), cy});
    }
  return CsrMatrix::from_triplets(g.size(), g.size(), std::move(t));
}

/// Constant term of the discrete Laplacian contributed by the eliminated
/// Dirichlet nodes, so that  (Laplacian u)_full = laplacian_matrix * u + b.
inline Vector boundary_contribution(const Grid& g, const DirichletData& bc) {
  Vector b(g.size(), 0.0);
  const std::size_t nx = g.n(0);
  const double cx = 1.0 / (g.h(0) * g.h(0));
  if (g.dim() == 1) {
    b.front() += bc.left * cx;
    b.back() += bc.right * cx;
    return b;
  }
  const std::size_t ny = g.n(1);
  const double cy = 1.0 / (g.h(1) * g.h(1));
  for (std::size_t j = 0; j < ny; ++j) {
    b[g.index(0, j)] += bc.left * cx;
    b[g.index(nx - 1, j)] += bc.right * cx;
  }
  for (std::size_t i = 0; i < nx; ++i) {
    b[g.index(i, 0)] += bc.bottom * cy;
    b[g.index(i, ny - 1)] += bc.top * cy;
  }
  return b;
}

/// Discrete L2 inner product with the cell volume as weight at every node.
inline InnerProduct l2_inner_product(const Grid& g) { return InnerProduct(Vector(g.size(), g.cell_volume())); }

}  // namespace deflate
