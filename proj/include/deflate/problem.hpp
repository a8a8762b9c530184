#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/grid.hpp"
#include "deflate/linalg.hpp"

namespace deflate {

/// A discretized nonlinear system F(u) = 0 with a sparse Jacobian.
///
/// Instances are immutable; `with_parameter` returns a modified copy, so
/// residual and Jacobian evaluations are safe to run concurrently.
class NonlinearProblem {
 public:
  virtual ~NonlinearProblem() = default;

  virtual std::string name() const = 0;
  virtual const Grid& grid() const = 0;
  virtual DirichletData boundary() const { return {}; }

  std::size_t dimension() const { return grid().size(); }

  virtual Vector residual(std::span<const double> u) const = 0;
  virtual CsrMatrix jacobian(std::span<const double> u) const = 0;

  /// Names of the scalar parameters, e.g. {"lambda"}.
  virtual std::vector<std::string> parameter_names() const { return {}; }
  virtual double parameter(std::string_view name) const {
    throw UsageError(this->name() + ": no parameter named '" + std::string(name) + "'");
  }
  virtual std::unique_ptr<NonlinearProblem> with_parameter(std::string_view name, double value) const {
    (void)value;
    throw UsageError(this->name() + ": no parameter named '" + std::string(name) + "'");
  }

  virtual Vector initial_guess() const { return Vector(dimension(), 0.0); }
  virtual InnerProduct inner_product() const { return l2_inner_product(grid()); }

  /// Multiplier turning the pointwise residual into its quadrature-weighted
  /// form; convergence tests compare residual_scale() * |F|_inf to atol.
  virtual double residual_scale() const { return grid().cell_volume(); }

  /// Scalar functionals usable as bifurcation-diagram ordinates.
  virtual std::vector<std::string> functional_names() const { return {"max", "l2norm"}; }
  virtual double functional(std::string_view name, std::span<const double> u) const {
    if (name == "max") return norm_inf(u);
    if (name == "l2norm") return inner_product().norm(u);
    throw UsageError(this->name() + ": unknown functional '" + std::string(name) + "'");
  }

  /// Symmetry maps applied to node values; empty when the problem declares no
  /// reflection for that axis.
  virtual std::optional<Vector> reflect(std::span<const double> u, int axis) const {
    (void)u;
    (void)axis;
    return std::nullopt;
  }

  Field make_field(Vector values) const { return Field(grid(), std::move(values), boundary()); }
};

/// Scalar functional by name, failing with UsageError when unregistered.
inline double branch_functional(const NonlinearProblem& problem, std::span<const double> u,
                                std::string_view name) {
  const auto names = problem.functional_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw UsageError(problem.name() + ": unknown functional '" + std::string(name) + "'");
  return problem.functional(name, u);
}

}  // namespace deflate
