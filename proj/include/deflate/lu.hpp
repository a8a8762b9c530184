#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/linalg.hpp"

namespace deflate {

/// LU factorization with partial pivoting of a dense square matrix.
class DenseLu {
 public:
  explicit DenseLu(DenseMatrix A) : lu_(std::move(A)), perm_(lu_.rows()) {
    if (lu_.rows() != lu_.cols()) throw UsageError("DenseLu: matrix not square");
    const std::size_t n = lu_.rows();
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t p = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i)
        if (std::abs(lu_(i, k)) > best) best = std::abs(lu_(p = i, k));
      if (best == 0.0 || !std::isfinite(best))
        throw SingularMatrix("DenseLu: zero pivot in column " + std::to_string(k));
      if (p != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(p).begin());
        std::swap(perm_[k], perm_[p]);
      }
      const double pivot = lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double l = lu_(i, k) / pivot;
        lu_(i, k) = l;
        if (l == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= l * lu_(k, j);
      }
    }
  }

  std::size_t dimension() const { return lu_.rows(); }

  Vector solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    require_same_size(b.size(), n, "DenseLu::solve");
    Vector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) x[i] -= lu_(i, j) * x[j];
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t j = i + 1; j < n; ++j) x[i] -= lu_(i, j) * x[j];
      x[i] /= lu_(i, i);
    }
    return x;
  }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
};

/// Banded LU with partial pivoting, for sparse matrices whose nonzeros lie
/// within a band (1D stencils, 2D stencils in natural ordering). Row pivoting
/// widens the upper band of U to kl + ku.
class BandedLu {
 public:
  explicit BandedLu(const CsrMatrix& A) : n_(A.n_rows()) {
    if (A.n_rows() != A.n_cols()) throw UsageError("BandedLu: matrix not square");
    std::tie(kl_, ku_) = A.bandwidth();
    width_ = 2 * kl_ + ku_ + 1;
    band_.assign(n_ * width_, 0.0);
    ipiv_.resize(n_);
    const auto& off = A.row_offsets();
    const auto& col = A.col_indices();
    const auto& val = A.values();
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) at(i, col[k]) = val[k];
    factor();
  }

  std::size_t dimension() const { return n_; }

  Vector solve(std::span<const double> b) const {
    require_same_size(b.size(), n_, "BandedLu::solve");
    Vector x(b.begin(), b.end());
    for (std::size_t k = 0; k < n_; ++k) {
      if (ipiv_[k] != k) std::swap(x[k], x[ipiv_[k]]);
      const std::size_t last = std::min(n_ - 1, k + kl_);
      for (std::size_t i = k + 1; i <= last; ++i) x[i] -= at(i, k) * x[k];
    }
    for (std::size_t i = n_; i-- > 0;) {
      const std::size_t last = std::min(n_ - 1, i + kl_ + ku_);
      double s = x[i];
      for (std::size_t j = i + 1; j <= last; ++j) s -= at(i, j) * x[j];
      x[i] = s / at(i, i);
    }
    return x;
  }

 private:
  // Row i stores columns [i - kl, i + kl + ku].
  double& at(std::size_t i, std::size_t j) { return band_[i * width_ + (j + kl_ - i)]; }
  double at(std::size_t i, std::size_t j) const { return band_[i * width_ + (j + kl_ - i)]; }

  void factor() {
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t last_row = std::min(n_ - 1, k + kl_);
      const std::size_t last_col = std::min(n_ - 1, k + kl_ + ku_);
      std::size_t p = k;
      double best = std::abs(at(k, k));
      for (std::size_t i = k + 1; i <= last_row; ++i)
        if (std::abs(at(i, k)) > best) best = std::abs(at(p = i, k));
      if (best == 0.0 || !std::isfinite(best))
        throw SingularMatrix("BandedLu: zero pivot in column " + std::to_string(k));
      ipiv_[k] = p;
      if (p != k)
        for (std::size_t j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
      const double pivot = at(k, k);
      const double* __restrict urow = &at(k, k);
      const std::size_t len = last_col - k;
      for (std::size_t i = k + 1; i <= last_row; ++i) {
        double& lik = at(i, k);
        if (lik == 0.0) continue;
        lik /= pivot;
        const double l = lik;
        double* __restrict row = &at(i, k);
        for (std::size_t j = 1; j <= len; ++j) row[j] -= l * urow[j];
      }
    }
  }

  std::size_t n_ = 0;
  std::size_t kl_ = 0;
  std::size_t ku_ = 0;
  std::size_t width_ = 0;
  Vector band_;
  std::vector<std::size_t> ipiv_;
};

/// Direct solve of A x = b with partial pivoting.
inline Vector lu_solve(const DenseMatrix& A, std::span<const double> b) {
  return DenseLu(A).solve(b);
}

/// Sparse input is factored in band storage.
inline Vector lu_solve(const CsrMatrix& A, std::span<const double> b) {
  return BandedLu(A).solve(b);
}

}  // namespace deflate
