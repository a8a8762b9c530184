#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/grid.hpp"
#include "deflate/linalg.hpp"
#include "deflate/problem.hpp"

namespace deflate {

// ---------------------------------------------------------------------------
// Sigmoid: f(x) = x / sqrt(1 + x^2) + 2x^2 / sqrt(1 + x^4)
// ---------------------------------------------------------------------------

inline double sigmoid_residual(double x) {
  if (std::abs(x) <= 1.0) return x / std::hypot(1.0, x) + 2.0 * x * x / std::hypot(1.0, x * x);
  // Divide through by |x| and x^2 so that x^2 cannot overflow.
  const double r = 1.0 / x;
  return std::copysign(1.0, x) / std::hypot(1.0, r) + 2.0 / std::hypot(1.0, r * r);
}

inline double sigmoid_derivative(double x) {
  const double a = std::hypot(1.0, x);
  const double b = std::hypot(1.0, x * x);
  return 1.0 / (a * a * a) + 4.0 * x / (b * b * b);
}

class SigmoidProblem final : public NonlinearProblem {
 public:
  explicit SigmoidProblem(double x0 = -1.0) : x0_(x0) {}

  std::string name() const override { return "sigmoid"; }
  const Grid& grid() const override { return grid_; }

  Vector residual(std::span<const double> u) const override {
    require_same_size(u.size(), 1, "sigmoid residual");
    return {sigmoid_residual(u[0])};
  }
  CsrMatrix jacobian(std::span<const double> u) const override {
    require_same_size(u.size(), 1, "sigmoid jacobian");
    return CsrMatrix(1, 1, {0, 1}, {0}, {sigmoid_derivative(u[0])});
  }
  Vector initial_guess() const override { return {x0_}; }

  std::vector<std::string> functional_names() const override { return {"max", "l2norm", "value"}; }
  double functional(std::string_view name, std::span<const double> u) const override {
    if (name == "value") return u[0];
    return NonlinearProblem::functional(name, u);
  }

  /// The two real roots: 0 and -sqrt((sqrt(7) - 2) / 3).
  static double negative_root() { return -std::sqrt((std::sqrt(7.0) - 2.0) / 3.0); }

 private:
  Grid grid_ = Grid::scalar();
  double x0_;
};

// ---------------------------------------------------------------------------
// Bratu-Gelfand: u'' + lambda e^u = 0 on (0, 1), u(0) = u(1) = 0
// ---------------------------------------------------------------------------

class BratuProblem final : public NonlinearProblem {
 public:
  explicit BratuProblem(double lambda = 2.0, std::size_t n = 999)
      : grid_(Grid::interval(0.0, 1.0, n)), lambda_(lambda), laplacian_(laplacian_matrix(grid_)) {
    if (!(lambda >= 0.0)) throw UsageError("bratu: lambda must be nonnegative");
  }

  std::string name() const override { return "bratu"; }
  const Grid& grid() const override { return grid_; }

  Vector residual(std::span<const double> u) const override {
    Vector F = csr_matvec(laplacian_, u);
    for (std::size_t i = 0; i < F.size(); ++i) F[i] += lambda_ * std::exp(u[i]);
    return F;
  }
  CsrMatrix jacobian(std::span<const double> u) const override {
    require_same_size(u.size(), dimension(), "bratu jacobian");
    Vector d(u.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = lambda_ * std::exp(u[i]);
    return laplacian_.add_diagonal(d);
  }

  std::vector<std::string> parameter_names() const override { return {"lambda"}; }
  double parameter(std::string_view name) const override {
    if (name == "lambda") return lambda_;
    return NonlinearProblem::parameter(name);
  }
  std::unique_ptr<NonlinearProblem> with_parameter(std::string_view name, double value) const override {
    if (name == "lambda") return std::make_unique<BratuProblem>(value, grid_.n(0));
    return NonlinearProblem::with_parameter(name, value);
  }

  std::optional<Vector> reflect(std::span<const double> u, int axis) const override {
    if (axis != 0) return std::nullopt;
    return Vector(u.rbegin(), u.rend());
  }

 private:
  Grid grid_;
  double lambda_;
  CsrMatrix laplacian_;
};

// ---------------------------------------------------------------------------
// Truncated Painleve BVP: u'' = u^2 - x on (0, 10), u(0) = 0, u(10) = sqrt(10)
// ---------------------------------------------------------------------------

class PainleveProblem final : public NonlinearProblem {
 public:
  explicit PainleveProblem(std::size_t n = 999, double length = 10.0)
      : grid_(Grid::interval(0.0, length, n)),
        bc_{0.0, std::sqrt(length), 0.0, 0.0},
        laplacian_(laplacian_matrix(grid_)),
        bterm_(boundary_contribution(grid_, bc_)) {}

  std::string name() const override { return "painleve"; }
  const Grid& grid() const override { return grid_; }
  DirichletData boundary() const override { return bc_; }

  Vector residual(std::span<const double> u) const override {
    Vector F = csr_matvec(laplacian_, u);
    for (std::size_t i = 0; i < F.size(); ++i) F[i] += bterm_[i] - u[i] * u[i] + grid_.x(i);
    return F;
  }
  CsrMatrix jacobian(std::span<const double> u) const override {
    require_same_size(u.size(), dimension(), "painleve jacobian");
    Vector d(u.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = -2.0 * u[i];
    return laplacian_.add_diagonal(d);
  }

  /// Linear function matching both boundary values.
  Vector initial_guess() const override {
    const double L = grid_.hi(0);
    return grid_.sample([&](double x, double) { return bc_.right * x / L; });
  }

  std::vector<std::string> functional_names() const override { return {"max", "l2norm", "slope0"}; }
  double functional(std::string_view name, std::span<const double> u) const override {
    if (name == "slope0") return slope_at_origin(u);
    return NonlinearProblem::functional(name, u);
  }

  /// One-sided second-order estimate of u'(0) using u(0) = 0.
  double slope_at_origin(std::span<const double> u) const {
    const double h = grid_.h(0);
    return (4.0 * u[0] - u[1] - 3.0 * bc_.left) / (2.0 * h);
  }

 private:
  Grid grid_;
  DirichletData bc_;
  CsrMatrix laplacian_;
  Vector bterm_;
};

// ---------------------------------------------------------------------------
// Hao et al. example: u'' = -lambda (1 + u^4) on (0, 1), u'(0) = 0, u(1) = 0
// ---------------------------------------------------------------------------

/// The unknowns are the nodes x = 0, h, ..., 1 - h. The Neumann condition is
/// imposed with a mirrored ghost node, giving the first row (-2, 2) / h^2. The
/// grid is stored as an interval starting at the ghost node x = -h.
class HaoProblem final : public NonlinearProblem {
 public:
  /// `cells` is the number of intervals on (0, 1).
  explicit HaoProblem(double lambda = 1.2, std::size_t cells = 100)
      : cells_(cells),
        grid_(Grid::interval(-1.0 / static_cast<double>(cells), 1.0, cells)),
        lambda_(lambda) {
    if (cells < 2) throw UsageError("hao: need at least two cells");
    const std::size_t n = cells;
    const double h = 1.0 / static_cast<double>(cells);
    const double c = 1.0 / (h * h);
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) t.push_back({i, i - 1, c});
      t.push_back({i, i, -2.0 * c});
      if (i + 1 < n) t.push_back({i, i + 1, i == 0 ? 2.0 * c : c});
    }
    operator_ = CsrMatrix::from_triplets(n, n, std::move(t));
    Vector w(n, h);
    w[0] = 0.5 * h;
    weights_ = InnerProduct(std::move(w));
  }

  std::string name() const override { return "hao"; }
  const Grid& grid() const override { return grid_; }

  Vector residual(std::span<const double> u) const override {
    Vector F = csr_matvec(operator_, u);
    for (std::size_t i = 0; i < F.size(); ++i) {
      const double u2 = u[i] * u[i];
      F[i] += lambda_ * (1.0 + u2 * u2);
    }
    return F;
  }
  CsrMatrix jacobian(std::span<const double> u) const override {
    require_same_size(u.size(), dimension(), "hao jacobian");
    Vector d(u.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 4.0 * lambda_ * u[i] * u[i] * u[i];
    return operator_.add_diagonal(d);
  }

  InnerProduct inner_product() const override { return weights_; }

  std::vector<std::string> parameter_names() const override { return {"lambda"}; }
  double parameter(std::string_view name) const override {
    if (name == "lambda") return lambda_;
    return NonlinearProblem::parameter(name);
  }
  std::unique_ptr<NonlinearProblem> with_parameter(std::string_view name, double value) const override {
    if (name == "lambda") return std::make_unique<HaoProblem>(value, cells_);
    return NonlinearProblem::with_parameter(name, value);
  }

 private:
  std::size_t cells_;
  Grid grid_;
  double lambda_;
  CsrMatrix operator_;
  InnerProduct weights_;
};

// ---------------------------------------------------------------------------
// Steady Allen-Cahn: -delta lap u + (u^3 - u) / delta = 0 on (0, 1)^2
// ---------------------------------------------------------------------------

class AllenCahnProblem final : public NonlinearProblem {
 public:
  /// u = +1 on x = 0, 1 and u = -1 on y = 0, 1.
  static DirichletData default_boundary() { return {1.0, 1.0, -1.0, -1.0}; }

  /// nx by ny interior nodes; ny = 0 means square.
  explicit AllenCahnProblem(double delta = 0.04, std::size_t nx = 99, std::size_t ny = 0,
                            DirichletData bc = default_boundary())
      : grid_(Grid::rectangle(0.0, 1.0, 0.0, 1.0, nx, ny ? ny : nx)),
        bc_(bc),
        delta_(delta),
        laplacian_(laplacian_matrix(grid_)),
        bterm_(boundary_contribution(grid_, bc_)),
        stiffness_(laplacian_.scaled(-delta)) {
    if (!(delta > 0.0)) throw UsageError("allen-cahn: delta must be positive");
  }

  std::string name() const override { return "allen-cahn"; }
  const Grid& grid() const override { return grid_; }
  DirichletData boundary() const override { return bc_; }

  Vector residual(std::span<const double> u) const override {
    Vector F = csr_matvec(stiffness_, u);
    for (std::size_t i = 0; i < F.size(); ++i)
      F[i] += -delta_ * bterm_[i] + (u[i] * u[i] * u[i] - u[i]) / delta_;
    return F;
  }
  CsrMatrix jacobian(std::span<const double> u) const override {
    require_same_size(u.size(), dimension(), "allen-cahn jacobian");
    Vector d(u.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (3.0 * u[i] * u[i] - 1.0) / delta_;
    return stiffness_.add_diagonal(d);
  }

  std::vector<std::string> parameter_names() const override { return {"delta"}; }
  double parameter(std::string_view name) const override {
    if (name == "delta") return delta_;
    return NonlinearProblem::parameter(name);
  }
  std::unique_ptr<NonlinearProblem> with_parameter(std::string_view name, double value) const override {
    if (name == "delta") return std::make_unique<AllenCahnProblem>(value, grid_.n(0), grid_.n(1), bc_);
    return NonlinearProblem::with_parameter(name, value);
  }

  std::vector<std::string> functional_names() const override { return {"max", "l2norm", "mean"}; }
  double functional(std::string_view name, std::span<const double> u) const override {
    if (name == "mean") {
      double s = 0.0;
      for (double v : u) s += v;
      return s * grid_.cell_volume();
    }
    return NonlinearProblem::functional(name, u);
  }

  /// axis 0: x -> 1 - x, axis 1: y -> 1 - y.
  std::optional<Vector> reflect(std::span<const double> u, int axis) const override {
    if (axis != 0 && axis != 1) return std::nullopt;
    const std::size_t nx = grid_.n(0);
    const std::size_t ny = grid_.n(1);
    require_same_size(u.size(), dimension(), "allen-cahn reflect");
    Vector r(u.size());
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const std::size_t src = axis == 0 ? grid_.index(nx - 1 - i, j) : grid_.index(i, ny - 1 - j);
        r[grid_.index(i, j)] = u[src];
      }
    return r;
  }

 private:
  Grid grid_;
  DirichletData bc_;
  double delta_;
  CsrMatrix laplacian_;
  Vector bterm_;
  CsrMatrix stiffness_;
};

// ---------------------------------------------------------------------------
// Lookup by name
// ---------------------------------------------------------------------------

struct ProblemOptions {
  std::optional<double> lambda;
  std::optional<double> delta;
  /// Cells per axis; 0 selects the problem default. mesh_y applies to 2D
  /// problems only and defaults to mesh.
  std::size_t mesh = 0;
  std::size_t mesh_y = 0;
  std::optional<double> x0;
};

inline std::vector<std::string> problem_names() { return {"sigmoid", "bratu", "painleve", "hao", "allen-cahn"}; }

inline std::unique_ptr<NonlinearProblem> make_problem(std::string_view name, const ProblemOptions& opt = {}) {
  auto cells = [&](std::size_t fallback) { return opt.mesh ? opt.mesh : fallback; };
  auto interior = [&](std::size_t fallback) {
    const std::size_t c = cells(fallback);
    if (c < 2) throw UsageError("mesh must have at least two cells");
    return c - 1;
  };
  if (name == "sigmoid") return std::make_unique<SigmoidProblem>(opt.x0.value_or(-1.0));
  if (name == "bratu") return std::make_unique<BratuProblem>(opt.lambda.value_or(2.0), interior(1000));
  if (name == "painleve") return std::make_unique<PainleveProblem>(interior(1000));
  if (name == "hao") return std::make_unique<HaoProblem>(opt.lambda.value_or(1.2), cells(100));
  if (name == "allen-cahn") {
    if (opt.mesh_y == 1) throw UsageError("mesh must have at least two cells");
    const std::size_t nx = interior(100);
    const std::size_t ny = opt.mesh_y ? opt.mesh_y - 1 : nx;
    return std::make_unique<AllenCahnProblem>(opt.delta.value_or(0.04), nx, ny);
  }
  throw UsageError("unknown problem '" + std::string(name) + "'");
}

}  // namespace deflate
