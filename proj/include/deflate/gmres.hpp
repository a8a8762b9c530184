#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/linalg.hpp"

namespace deflate {

struct KrylovStats {
  std::size_t iterations = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  /// Arnoldi broke down before the tolerance was met.
  bool stagnated = false;
  /// Preconditioned residual norm after each iteration, starting with the
  /// initial residual.
  std::vector<double> residual_history;
};

struct GmresOptions {
  double rtol = 1e-12;
  double atol = 1e-12;
  std::size_t max_iter = 200;
};

/// Left-preconditioned GMRES without restarts on P_inv A x = P_inv b, x0 = 0.
///
/// Stops once the preconditioned residual drops to max(rtol * |P_inv b|, atol).
/// Arnoldi uses classical Gram-Schmidt with one reorthogonalization pass.
inline std::pair<Vector, KrylovStats> gmres(const LinearOperator& A, const LinearOperator& P_inv,
                                            std::span<const double> b,
                                            const GmresOptions& opt = {}) {
  const std::size_t n = A.dimension;
  require_same_size(b.size(), n, "gmres");
  require_same_size(P_inv.dimension, n, "gmres preconditioner");
  if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) throw UsageError("gmres: tolerances must be positive");

  KrylovStats stats;
  Vector x(n, 0.0);
  Vector r0 = P_inv(b);
  const double beta = norm2(r0);
  stats.residual_history.push_back(beta);
  const double tol = std::max(opt.rtol * beta, opt.atol);
  if (!std::isfinite(beta)) return {x, stats};
  if (beta <= tol) {
    stats.converged = true;
    stats.final_relative_residual = beta > 0.0 ? 1.0 : 0.0;
    return {x, stats};
  }

  const std::size_t m = std::max<std::size_t>(1, std::min(opt.max_iter, n));
  std::vector<Vector> V;
  V.reserve(m + 1);
  V.emplace_back(r0);
  scale(1.0 / beta, V[0]);
  // Column j of the Hessenberg matrix is stored in H[j] (length j + 2).
  std::vector<Vector> H;
  std::vector<double> cs, sn;
  Vector g{beta};

  std::size_t k = 0;
  double residual = beta;
  bool breakdown = false;
  while (k < m) {
    Vector w = P_inv(A(V[k]));
    Vector h(k + 2, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i <= k; ++i) {
        const double c = dot(V[i], w);
        h[i] += c;
        axpy(-c, V[i], w);
      }
    }
    h[k + 1] = norm2(w);
    const double hnorm = norm2(std::span<const double>(h).first(k + 1));

    for (std::size_t i = 0; i < k; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double subdiag = h[k + 1];
    const double rho = std::hypot(h[k], subdiag);
    const double c = rho > 0.0 ? h[k] / rho : 1.0;
    const double s = rho > 0.0 ? subdiag / rho : 0.0;
    cs.push_back(c);
    sn.push_back(s);
    h[k] = rho;
    h[k + 1] = 0.0;
    g.push_back(-s * g[k]);
    g[k] = c * g[k];
    H.push_back(std::move(h));
    ++k;

    residual = std::abs(g[k]);
    stats.residual_history.push_back(residual);
    if (!std::isfinite(residual)) break;
    if (residual <= tol) break;
    if (subdiag <= 1e3 * std::numeric_limits<double>::epsilon() * std::max(hnorm, subdiag)) {
      breakdown = true;
      break;
    }
    V.emplace_back(std::move(w));
    scale(1.0 / subdiag, V.back());
  }

  // Back substitution on the rotated triangular system.
  Vector y(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double s = g[i];
    for (std::size_t j = i + 1; j < k; ++j) s -= H[j][i] * y[j];
    y[i] = H[i][i] != 0.0 ? s / H[i][i] : 0.0;
  }
  for (std::size_t j = 0; j < k; ++j) axpy(y[j], V[j], x);

  stats.iterations = k;
  stats.final_relative_residual = residual / beta;
  stats.converged = std::isfinite(residual) && residual <= tol;
  stats.stagnated = breakdown && !stats.converged;
  return {x, stats};
}

}  // namespace deflate
