#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "deflate/errors.hpp"
#include "deflate/linalg.hpp"

namespace deflate {

/// Incomplete LU factorization with zero fill-in. L (unit lower) and U share
/// the sparsity pattern of the input matrix and are stored in one CSR array.
class Ilu0Factorization {
 public:
  explicit Ilu0Factorization(const CsrMatrix& A) : lu_(A) {
    if (A.n_rows() != A.n_cols()) throw UsageError("ilu0: matrix not square");
    const std::size_t n = A.n_rows();
    const auto& off = lu_.row_offsets();
    const auto& col = lu_.col_indices();
    auto& val = lu_.mutable_values();
    diag_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto first = col.begin() + static_cast<std::ptrdiff_t>(off[i]);
      auto last = col.begin() + static_cast<std::ptrdiff_t>(off[i + 1]);
      auto it = std::lower_bound(first, last, i);
      if (it == last || *it != i)
        throw Ilu0Breakdown("ilu0: structurally zero diagonal in row " + std::to_string(i));
      diag_[i] = static_cast<std::size_t>(it - col.begin());
    }

    // IKJ variant restricted to the pattern; position map for row i.
    std::vector<std::ptrdiff_t> pos(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) pos[col[k]] = static_cast<std::ptrdiff_t>(k);
      for (std::size_t kk = off[i]; kk < diag_[i]; ++kk) {
        const std::size_t k = col[kk];
        const double pivot = val[diag_[k]];
        if (pivot == 0.0 || !std::isfinite(pivot))
          throw Ilu0Breakdown("ilu0: zero pivot in row " + std::to_string(k));
        const double l = val[kk] / pivot;
        val[kk] = l;
        for (std::size_t jj = diag_[k] + 1; jj < off[k + 1]; ++jj) {
          const std::ptrdiff_t p = pos[col[jj]];
          if (p >= 0) val[static_cast<std::size_t>(p)] -= l * val[jj];
        }
      }
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) pos[col[k]] = -1;
      if (val[diag_[i]] == 0.0 || !std::isfinite(val[diag_[i]]))
        throw Ilu0Breakdown("ilu0: zero pivot in row " + std::to_string(i));
    }
  }

  std::size_t dimension() const { return lu_.n_rows(); }

  /// Combined factors: strictly lower part is L (unit diagonal implied).
  const CsrMatrix& factors() const { return lu_; }

  /// Solves L U x = b by forward and backward sweeps.
  Vector apply(std::span<const double> b) const {
    const std::size_t n = lu_.n_rows();
    require_same_size(b.size(), n, "ilu0 apply");
    const auto& off = lu_.row_offsets();
    const auto& col = lu_.col_indices();
    const auto& val = lu_.values();
    Vector x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      for (std::size_t k = off[i]; k < diag_[i]; ++k) s -= val[k] * x[col[k]];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x[i];
      for (std::size_t k = diag_[i] + 1; k < off[i + 1]; ++k) s -= val[k] * x[col[k]];
      x[i] = s / val[diag_[i]];
    }
    return x;
  }

 private:
  CsrMatrix lu_;
  std::vector<std::size_t> diag_;
};

inline Ilu0Factorization ilu0_factor(const CsrMatrix& A) { return Ilu0Factorization(A); }

/// ilu0_factor, retrying once with the diagonal shifted by 1e-8 * max|diag|
/// when the first attempt hits a zero pivot.
inline Ilu0Factorization ilu0_factor_with_shift(const CsrMatrix& A) {
  try {
    return Ilu0Factorization(A);
  } catch (const Ilu0Breakdown&) {
    const Vector d = A.diagonal();
    const double shift = 1e-8 * std::max(norm_inf(d), 1.0);
    return Ilu0Factorization(A.add_diagonal(Vector(A.n_rows(), shift)));
  }
}

}  // namespace deflate
