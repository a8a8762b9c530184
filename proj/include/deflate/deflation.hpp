#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/linalg.hpp"
#include "deflate/log.hpp"
#include "deflate/problem.hpp"

namespace deflate {

/// Shifted deflation m(u; r) = |u - r|^{-p} + alpha. alpha = 0 gives
/// (exponentiated) norm deflation.
struct DeflationConfig {
  double p = 1.0;
  double alpha = 1.0;

  void validate() const {
    if (!(p >= 1.0) || !std::isfinite(p)) throw UsageError("deflation: p must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw UsageError("deflation: alpha must be >= 0");
  }
};

/// Scalar deflation factor of a single root.
inline double factor(std::span<const double> u, std::span<const double> r, const DeflationConfig& cfg,
                     const InnerProduct& ip) {
  const double dist = ip.distance(u, r);
  if (dist == 0.0) throw AtDeflatedRoot("deflation factor evaluated at a deflated root");
  return std::pow(dist, -cfg.p) + cfg.alpha;
}

/// Deflation state: a list of roots with one (p, alpha) each, measured in a
/// fixed inner product. Roots are append-only.
class DeflationOperator {
 public:
  struct Evaluation {
    /// M(u) = prod_i m_i(u).
    double M = 1.0;
    /// log M(u), accumulated term by term.
    double log_M = 0.0;
    /// d(u) = grad M(u).
    Vector gradient;
  };

  DeflationOperator(InnerProduct ip, DeflationConfig cfg) : ip_(std::move(ip)), cfg_(cfg) { cfg_.validate(); }

  const InnerProduct& inner_product() const { return ip_; }
  const DeflationConfig& config() const { return cfg_; }
  std::size_t size() const { return roots_.size(); }
  bool empty() const { return roots_.empty(); }
  const std::vector<Vector>& roots() const { return roots_; }

  /// Appends a root using the default (p, alpha), or an explicit per-root pair.
  void add_root(Vector r, std::optional<DeflationConfig> cfg = std::nullopt, double dedup_tol = 0.0) {
    require_same_size(r.size(), ip_.dimension(), "DeflationOperator::add_root");
    for (const auto& q : roots_)
      if (ip_.distance(q, r) <= dedup_tol)
        throw UsageError("DeflationOperator: root coincides with an existing root");
    const DeflationConfig c = cfg.value_or(cfg_);
    c.validate();
    roots_.push_back(std::move(r));
    configs_.push_back(c);
  }

  /// M(u) and its gradient. The product is formed in log space when it would
  /// exceed 1e300; the gradient is accumulated as M * sum_j grad m_j / m_j.
  Evaluation evaluate(std::span<const double> u) const {
    require_same_size(u.size(), ip_.dimension(), "DeflationOperator::evaluate");
    Evaluation e;
    e.gradient.assign(u.size(), 0.0);
    if (roots_.empty()) return e;

    const auto& w = ip_.weights();
    Vector rel(u.size(), 0.0);  // sum_j grad m_j / m_j
    double product = 1.0;
    bool overflow = false;
    for (std::size_t j = 0; j < roots_.size(); ++j) {
      const auto& r = roots_[j];
      const auto& c = configs_[j];
      const double dist = ip_.distance(u, r);
      if (dist == 0.0) throw AtDeflatedRoot("deflated operator evaluated at deflated root " + std::to_string(j));
      const double inv = std::pow(dist, -c.p);
      const double m = inv + c.alpha;
      // grad m_j = -p |u - r|^{-p-2} W (u - r)
      const double coeff = -c.p * inv / (dist * dist) / m;
      for (std::size_t i = 0; i < u.size(); ++i) rel[i] += coeff * w[i] * (u[i] - r[i]);
      e.log_M += std::log(m);
      if (!overflow) {
        product *= m;
        overflow = !(product <= 1e300);
      }
    }
    if (overflow) {
      e.M = std::exp(e.log_M);
      if (!std::isfinite(e.M))
        throw AtDeflatedRoot("deflation factor overflows: iterate is numerically at a deflated root");
    } else {
      e.M = product;
    }
    for (std::size_t i = 0; i < u.size(); ++i) e.gradient[i] = e.M * rel[i];
    return e;
  }

 private:
  InnerProduct ip_;
  DeflationConfig cfg_;
  std::vector<Vector> roots_;
  std::vector<DeflationConfig> configs_;
};

inline double total_factor(std::span<const double> u, const DeflationOperator& op) { return op.evaluate(u).M; }

inline Vector total_gradient(std::span<const double> u, const DeflationOperator& op) {
  return op.evaluate(u).gradient;
}

/// Action of (M P_F + F d^T)^{-1}, given the action of P_F^{-1}, by the
/// Sherman-Morrison formula with A = M P_F:
///   A^{-1} v - A^{-1} F (d^T A^{-1} v) / (1 + d^T A^{-1} F).
class DeflatedPreconditioner {
 public:
  DeflatedPreconditioner(LinearOperator base_apply, double M, Vector F, Vector d)
      : base_(std::move(base_apply)), M_(M), d_(std::move(d)) {
    require_same_size(F.size(), base_.dimension, "DeflatedPreconditioner");
    require_same_size(d_.size(), base_.dimension, "DeflatedPreconditioner");
    if (!(M > 0.0) || !std::isfinite(M)) throw UsageError("DeflatedPreconditioner: M must be positive");
    ainv_f_ = base_(F);
    scale(1.0 / M_, ainv_f_);
    denominator_ = 1.0 + dot(d_, ainv_f_);
    const double guard = 1e-14 * (1.0 + norm2(d_) * norm2(ainv_f_));
    if (!(std::abs(denominator_) >= guard))
      throw ShermanMorrisonBreakdown("Sherman-Morrison denominator 1 + d^T A^{-1} F vanished");
  }

  std::size_t dimension() const { return base_.dimension; }
  double denominator() const { return denominator_; }

  Vector apply(std::span<const double> v) const {
    Vector y = base_(v);
    scale(1.0 / M_, y);
    axpy(-dot(d_, y) / denominator_, ainv_f_, y);
    return y;
  }

  LinearOperator as_operator() const {
    return {dimension(), [self = *this](std::span<const double> v) { return self.apply(v); }};
  }

 private:
  LinearOperator base_;
  double M_;
  Vector d_;
  Vector ainv_f_;
  double denominator_ = 1.0;
};

inline Vector deflated_preconditioner_apply(const DeflatedPreconditioner& pc, std::span<const double> v) {
  return pc.apply(v);
}

/// G(u) = M(u) F(u) for a problem and a deflation operator.
class DeflatedSystem {
 public:
  /// Everything evaluated at one point u.
  struct Point {
    Vector u;
    Vector F;
    double M = 1.0;
    Vector d;
    Vector G;
  };

  DeflatedSystem(const NonlinearProblem& problem, const DeflationOperator& deflation)
      : problem_(&problem), deflation_(&deflation) {
    require_same_size(problem.dimension(), deflation.inner_product().dimension(), "DeflatedSystem");
  }

  const NonlinearProblem& problem() const { return *problem_; }
  const DeflationOperator& deflation() const { return *deflation_; }
  std::size_t dimension() const { return problem_->dimension(); }

  Point evaluate(std::span<const double> u) const {
    Point pt;
    pt.u.assign(u.begin(), u.end());
    auto e = deflation_->evaluate(u);
    pt.M = e.M;
    pt.d = std::move(e.gradient);
    pt.F = problem_->residual(u);
    pt.G = pt.F;
    if (pt.M != 1.0) scale(pt.M, pt.G);
    return pt;
  }

  Vector residual(std::span<const double> u) const { return evaluate(u).G; }

  /// J_G v = M J_F v + (d . v) F, never assembled.
  static Vector jacobian_action(const Point& pt, const CsrMatrix& J_F, std::span<const double> v) {
    Vector y = csr_matvec(J_F, v);
    if (pt.M != 1.0) scale(pt.M, y);
    axpy(dot(pt.d, v), pt.F, y);
    return y;
  }

  Vector jacobian_action(std::span<const double> u, std::span<const double> v) const {
    const Point pt = evaluate(u);
    return jacobian_action(pt, problem_->jacobian(u), v);
  }

  LinearOperator jacobian_operator(const Point& pt, CsrMatrix J_F) const {
    return {dimension(), [pt, J = std::move(J_F)](std::span<const double> v) { return jacobian_action(pt, J, v); }};
  }

  /// Deflated preconditioner around `base` (an approximation of J_F^{-1}).
  static DeflatedPreconditioner preconditioner(const Point& pt, LinearOperator base) {
    return DeflatedPreconditioner(std::move(base), pt.M, pt.F, pt.d);
  }

 private:
  const NonlinearProblem* problem_;
  const DeflationOperator* deflation_;
};

inline Vector deflated_residual(const DeflatedSystem& sys, std::span<const double> u) { return sys.residual(u); }

inline Vector deflated_jacobian_action(const DeflatedSystem& sys, std::span<const double> u,
                                       std::span<const double> v) {
  return sys.jacobian_action(u, v);
}

}  // namespace deflate
