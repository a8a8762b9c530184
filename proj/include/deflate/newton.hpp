#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deflate/deflation.hpp"
#include "deflate/errors.hpp"
#include "deflate/gmres.hpp"
#include "deflate/ilu0.hpp"
#include "deflate/linalg.hpp"
#include "deflate/log.hpp"
#include "deflate/lu.hpp"
#include "deflate/problem.hpp"

namespace deflate {

enum class Damping { None, ErrorOriented };
enum class LinearSolverKind { Direct, Gmres };
enum class PreconditionerKind { None, Ilu0, Exact };

struct NewtonConfig {
  /// Tolerance on residual_scale() * |F(u)|_inf of the undeflated residual.
  double atol = 1e-10;
  std::size_t max_iterations = 100;
  Damping damping = Damping::None;
  double lambda_min = 1e-10;
  LinearSolverKind linear_solver = LinearSolverKind::Direct;
  GmresOptions gmres{};
  PreconditionerKind preconditioner = PreconditionerKind::Ilu0;
  /// A small deflated residual with an undeflated residual above
  /// spurious_factor * atol is reported as spurious.
  double spurious_factor = 10.0;

  void validate() const {
    if (!(atol > 0.0)) throw UsageError("newton: atol must be positive");
    if (!(lambda_min > 0.0 && lambda_min < 1.0)) throw UsageError("newton: lambda_min must lie in (0, 1)");
  }
};

struct NewtonResult {
  bool converged = false;
  bool spurious = false;
  std::size_t iterations = 0;
  Vector solution;
  /// Scaled undeflated residual max-norm at every iterate, starting with u0.
  std::vector<double> residual_history;
  /// Same for the deflated residual G.
  std::vector<double> deflated_residual_history;
  std::vector<KrylovStats> krylov_history;
  /// Accepted damping factor of each step.
  std::vector<double> damping_history;
  std::string diagnostic;

  double mean_krylov_iterations() const {
    if (krylov_history.empty()) return 0.0;
    double s = 0.0;
    for (const auto& k : krylov_history) s += static_cast<double>(k.iterations);
    return s / static_cast<double>(krylov_history.size());
  }
};

namespace detail {

class LinearSolveFailed : public Error {
 public:
  using Error::Error;
};

/// Solver for J_G(u_k) x = b at a fixed linearization point. Reused for the
/// Newton correction and every simplified correction of the same step.
class Linearization {
 public:
  Linearization(const DeflatedSystem& sys, const DeflatedSystem::Point& pt, const NewtonConfig& cfg)
      : cfg_(cfg) {
    CsrMatrix J = sys.problem().jacobian(pt.u);
    const std::size_t n = J.n_rows();
    if (cfg.linear_solver == LinearSolverKind::Direct) {
      std::shared_ptr<const BandedLu> lu;
      try {
        lu = std::make_shared<const BandedLu>(J);
      } catch (const SingularMatrix& e) {
        throw LinearSolveFailed(std::string("singular Jacobian: ") + e.what());
      }
      LinearOperator base{n, [lu](std::span<const double> v) { return lu->solve(v); }};
      try {
        direct_.emplace(DeflatedSystem::preconditioner(pt, std::move(base)));
      } catch (const ShermanMorrisonBreakdown& e) {
        throw LinearSolveFailed(std::string("deflated Jacobian singular: ") + e.what());
      }
      return;
    }

    LinearOperator base = LinearOperator::identity(n);
    switch (cfg.preconditioner) {
      case PreconditionerKind::None:
        break;
      case PreconditionerKind::Ilu0: {
        auto ilu = std::make_shared<const Ilu0Factorization>(ilu0_factor_with_shift(J));
        base = {n, [ilu](std::span<const double> v) { return ilu->apply(v); }};
        break;
      }
      case PreconditionerKind::Exact: {
        std::shared_ptr<const BandedLu> lu;
        try {
          lu = std::make_shared<const BandedLu>(J);
        } catch (const SingularMatrix& e) {
          throw LinearSolveFailed(std::string("singular Jacobian: ") + e.what());
        }
        base = {n, [lu](std::span<const double> v) { return lu->solve(v); }};
        break;
      }
    }
    if (cfg.preconditioner == PreconditionerKind::None) {
      precond_ = base;
    } else {
      try {
        precond_ = DeflatedSystem::preconditioner(pt, base).as_operator();
      } catch (const ShermanMorrisonBreakdown&) {
        log_warning("Sherman-Morrison breakdown; using the undeflated preconditioner for this step");
        const double M = pt.M;
        precond_ = {n, [base, M](std::span<const double> v) {
                      Vector y = base(v);
                      scale(1.0 / M, y);
                      return y;
                    }};
      }
    }
    op_ = sys.jacobian_operator(pt, std::move(J));
  }

  Vector solve(std::span<const double> b, std::vector<KrylovStats>& history) const {
    if (direct_) {
      Vector x = direct_->apply(b);
      if (!all_finite(x)) throw LinearSolveFailed("direct solve produced non-finite values");
      return x;
    }
    auto [x, stats] = gmres(op_, precond_, b, cfg_.gmres);
    const bool ok = stats.converged;
    history.push_back(std::move(stats));
    if (!ok) throw LinearSolveFailed("GMRES did not converge");
    return x;
  }

 private:
  const NewtonConfig& cfg_;
  std::optional<DeflatedPreconditioner> direct_;
  LinearOperator op_;
  LinearOperator precond_;
};

inline Vector negated(std::span<const double> v) {
  Vector r(v.begin(), v.end());
  for (double& x : r) x = -x;
  return r;
}

}  // namespace detail

/// Newton's method on G(u) = M(u) F(u).
///
/// Convergence is declared on the undeflated residual only. With error-oriented
/// damping a trial step u + lambda * du is accepted when the simplified
/// correction (same Jacobian, residual at the trial point) satisfies
/// |du_bar| <= (1 - lambda / 2) |du| in the problem norm.
inline NewtonResult newton_solve(const DeflatedSystem& sys, std::span<const double> u0, const NewtonConfig& cfg) {
  cfg.validate();
  require_same_size(u0.size(), sys.dimension(), "newton_solve");
  const NonlinearProblem& problem = sys.problem();
  const InnerProduct ip = problem.inner_product();
  const double rscale = problem.residual_scale();

  NewtonResult res;
  Vector u(u0.begin(), u0.end());
  auto finish = [&](std::string why) {
    res.solution = u;
    res.diagnostic = std::move(why);
    return res;
  };

  DeflatedSystem::Point pt;
  try {
    pt = sys.evaluate(u);
  } catch (const AtDeflatedRoot& e) {
    return finish(e.what());
  }

  // Error-oriented damping state carried between steps.
  double lambda_prev = 1.0;
  Vector du_prev;
  Vector du_bar_prev;

  for (std::size_t k = 0;; ++k) {
    const double f_norm = rscale * norm_inf(pt.F);
    const double g_norm = rscale * norm_inf(pt.G);
    res.residual_history.push_back(f_norm);
    res.deflated_residual_history.push_back(g_norm);
    res.iterations = k;
    if (!std::isfinite(f_norm) || !all_finite(pt.u)) return finish("non-finite residual");
    if (f_norm <= cfg.atol) {
      res.converged = true;
      return finish("converged");
    }
    if (g_norm <= cfg.atol && f_norm > cfg.spurious_factor * cfg.atol) {
      res.spurious = true;
      return finish("spurious convergence: deflated residual small, undeflated residual not");
    }
    if (k >= cfg.max_iterations) return finish("iteration limit reached");

    std::optional<detail::Linearization> lin;
    Vector du;
    try {
      lin.emplace(sys, pt, cfg);
      du = lin->solve(detail::negated(pt.G), res.krylov_history);
    } catch (const detail::LinearSolveFailed& e) {
      return finish(e.what());
    }

    if (cfg.damping == Damping::None) {
      axpy(1.0, du, u);
      try {
        pt = sys.evaluate(u);
      } catch (const AtDeflatedRoot& e) {
        return finish(e.what());
      }
      res.damping_history.push_back(1.0);
      continue;
    }

    const double du_norm = ip.norm(du);
    double lambda = 1.0;
    if (!du_prev.empty()) {
      const double denom = ip.distance(du_bar_prev, du) * du_norm;
      const double mu = denom > 0.0 ? ip.norm(du_prev) * ip.norm(du_bar_prev) / denom * lambda_prev : 1.0;
      lambda = std::isfinite(mu) ? std::min(1.0, mu) : 1.0;
    }

    bool accepted = false;
    bool may_increase = true;
    Vector u_trial;
    Vector du_bar;
    DeflatedSystem::Point pt_trial;
    while (!accepted) {
      if (!(lambda >= cfg.lambda_min)) return finish("damping factor underflow");
      u_trial = u;
      axpy(lambda, du, u_trial);
      bool usable = all_finite(u_trial);
      if (usable) {
        try {
          pt_trial = sys.evaluate(u_trial);
          usable = all_finite(pt_trial.G);
          if (usable) du_bar = lin->solve(detail::negated(pt_trial.G), res.krylov_history);
        } catch (const AtDeflatedRoot&) {
          usable = false;
        } catch (const detail::LinearSolveFailed&) {
          usable = false;
        }
      }
      if (!usable) {
        lambda *= 0.5;
        continue;
      }
      const double theta = ip.norm(du_bar) / du_norm;
      Vector gap = du_bar;
      axpy(-(1.0 - lambda), du, gap);
      const double gap_norm = ip.norm(gap);
      const double mu_trial = gap_norm > 0.0 ? 0.5 * du_norm * lambda * lambda / gap_norm
                                             : std::numeric_limits<double>::infinity();
      if (!(theta <= 1.0 - 0.5 * lambda)) {
        lambda = std::isfinite(mu_trial) ? std::min(0.5 * lambda, mu_trial) : 0.5 * lambda;
        continue;
      }
      const double lambda_new = std::min(1.0, mu_trial);
      if (may_increase && lambda < 1.0 && lambda_new >= 4.0 * lambda) {
        may_increase = false;
        lambda = lambda_new;
        continue;
      }
      accepted = true;
    }

    u = std::move(u_trial);
    pt = std::move(pt_trial);
    res.damping_history.push_back(lambda);
    lambda_prev = lambda;
    du_prev = std::move(du);
    du_bar_prev = std::move(du_bar);
  }
}

/// Undeflated solve.
inline NewtonResult newton_solve(const NonlinearProblem& problem, std::span<const double> u0, const NewtonConfig& cfg) {
  const DeflationOperator none(problem.inner_product(), DeflationConfig{});
  return newton_solve(DeflatedSystem(problem, none), u0, cfg);
}

}  // namespace deflate
