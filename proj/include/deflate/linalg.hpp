#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "deflate/errors.hpp"

namespace deflate {

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Vector kernels
// ---------------------------------------------------------------------------

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw UsageError(std::string(what) + ": dimension mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

inline double dot(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

inline double norm_inf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) {
    if (std::isnan(v)) return v;
    m = std::max(m, std::abs(v));
  }
  return m;
}

/// y += a * x
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline Vector add(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "add");
  Vector z(x.begin(), x.end());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] += y[i];
  return z;
}

inline Vector subtract(std::span<const double> x, std::span<const double> y) {
  require_same_size(x.size(), y.size(), "subtract");
  Vector z(x.begin(), x.end());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] -= y[i];
  return z;
}

inline bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

// ---------------------------------------------------------------------------
// Dense matrices (row-major)
// ---------------------------------------------------------------------------

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix I(n, n);
    for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  Vector operator*(std::span<const double> x) const {
    require_same_size(x.size(), cols_, "DenseMatrix::operator*");
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* a = data_.data() + i * cols_;
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += a[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  DenseMatrix operator*(const DenseMatrix& B) const {
    require_same_size(cols_, B.rows_, "DenseMatrix product");
    DenseMatrix C(rows_, B.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < B.cols_; ++j) C(i, j) += a * B(k, j);
      }
    return C;
  }

  /// Frobenius norm.
  double norm() const { return norm2(data_); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

// ---------------------------------------------------------------------------
// Compressed sparse row matrices
// ---------------------------------------------------------------------------

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

class CsrMatrix {
 public:
  CsrMatrix() : row_offsets_{0} {}

  /// Validating constructor: offsets nondecreasing, column indices strictly
  /// increasing per row and in range, values finite.
  CsrMatrix(std::size_t n_rows, std::size_t n_cols, std::vector<std::size_t> row_offsets,
            std::vector<std::size_t> col_indices, Vector values)
      : n_rows_(n_rows),
        n_cols_(n_cols),
        row_offsets_(std::move(row_offsets)),
        col_indices_(std::move(col_indices)),
        values_(std::move(values)) {
    validate();
  }

  /// Assemble from unordered triplets; duplicates are summed.
  static CsrMatrix from_triplets(std::size_t n_rows, std::size_t n_cols,
                                 std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<std::size_t> offsets(n_rows + 1, 0);
    std::vector<std::size_t> cols;
    Vector vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto& t = entries[k];
      if (t.row >= n_rows || t.col >= n_cols) throw UsageError("from_triplets: index out of range");
      if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
        vals.back() += t.value;
        continue;
      }
      cols.push_back(t.col);
      vals.push_back(t.value);
      ++offsets[t.row + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(n_rows, n_cols, std::move(offsets), std::move(cols), std::move(vals));
  }

  static CsrMatrix from_dense(const DenseMatrix& D, bool keep_zeros = false) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < D.rows(); ++i)
      for (std::size_t j = 0; j < D.cols(); ++j)
        if (keep_zeros || D(i, j) != 0.0) t.push_back({i, j, D(i, j)});
    return from_triplets(D.rows(), D.cols(), std::move(t));
  }

  static CsrMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, n, std::move(t));
  }

  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::size_t>& col_indices() const { return col_indices_; }
  const Vector& values() const { return values_; }
  Vector& mutable_values() { return values_; }

  double at(std::size_t i, std::size_t j) const {
    auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - col_indices_.begin())]
                                    : 0.0;
  }

  Vector diagonal() const {
    Vector d(std::min(n_rows_, n_cols_), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
    return d;
  }

  DenseMatrix to_dense() const {
    DenseMatrix D(n_rows_, n_cols_);
    for (std::size_t i = 0; i < n_rows_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        D(i, col_indices_[k]) = values_[k];
    return D;
  }

  /// Lower and upper bandwidth.
  std::pair<std::size_t, std::size_t> bandwidth() const {
    std::size_t kl = 0, ku = 0;
    for (std::size_t i = 0; i < n_rows_; ++i)
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        const std::size_t j = col_indices_[k];
        if (j < i) kl = std::max(kl, i - j);
        else ku = std::max(ku, j - i);
      }
    return {kl, ku};
  }

  /// this + diag(d) on the union pattern.
  CsrMatrix add_diagonal(std::span<const double> d) const {
    require_same_size(d.size(), n_rows_, "add_diagonal");
    std::vector<Triplet> t;
    t.reserve(nnz() + n_rows_);
    for (std::size_t i = 0; i < n_rows_; ++i) {
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k)
        t.push_back({i, col_indices_[k], values_[k]});
      t.push_back({i, i, d[i]});
    }
    return from_triplets(n_rows_, n_cols_, std::move(t));
  }

  CsrMatrix scaled(double a) const {
    CsrMatrix B = *this;
    for (double& v : B.values_) v *= a;
    return B;
  }

 private:
  void validate() const {
    if (row_offsets_.size() != n_rows_ + 1) throw UsageError("CsrMatrix: row_offsets length");
    if (row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size() ||
        col_indices_.size() != values_.size())
      throw UsageError("CsrMatrix: inconsistent storage sizes");
    for (std::size_t i = 0; i < n_rows_; ++i) {
      if (row_offsets_[i] > row_offsets_[i + 1]) throw UsageError("CsrMatrix: offsets decrease");
      for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
        if (col_indices_[k] >= n_cols_) throw UsageError("CsrMatrix: column index out of range");
        if (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])
          throw UsageError("CsrMatrix: column indices not strictly increasing");
      }
    }
    if (!all_finite(values_)) throw UsageError("CsrMatrix: non-finite value");
  }

  std::size_t n_rows_ = 0;
  std::size_t n_cols_ = 0;
  std::vector<std::size_t> row_offsets_;
  std::vector<std::size_t> col_indices_;
  Vector values_;
};

/// y = A x, summing each row left to right.
inline Vector csr_matvec(const CsrMatrix& A, std::span<const double> x) {
  require_same_size(x.size(), A.n_cols(), "csr_matvec");
  Vector y(A.n_rows(), 0.0);
  const auto& off = A.row_offsets();
  const auto& col = A.col_indices();
  const auto& val = A.values();
  for (std::size_t i = 0; i < A.n_rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * x[col[k]];
    y[i] = s;
  }
  return y;
}

inline Vector operator*(const CsrMatrix& A, std::span<const double> x) { return csr_matvec(A, x); }

// ---------------------------------------------------------------------------
// Inner products and abstract operators
// ---------------------------------------------------------------------------

/// Diagonally weighted inner product <x, y> = sum_i w_i x_i y_i.
class InnerProduct {
 public:
  InnerProduct() = default;
  explicit InnerProduct(Vector weights) : weights_(std::move(weights)) {
    for (double w : weights_)
      if (!(w > 0.0) || !std::isfinite(w)) throw UsageError("InnerProduct: weights must be positive");
  }
  static InnerProduct euclidean(std::size_t n) { return InnerProduct(Vector(n, 1.0)); }

  std::size_t dimension() const { return weights_.size(); }
  const Vector& weights() const { return weights_; }

  double operator()(std::span<const double> x, std::span<const double> y) const {
    require_same_size(x.size(), weights_.size(), "InnerProduct");
    require_same_size(y.size(), weights_.size(), "InnerProduct");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += weights_[i] * x[i] * y[i];
    return s;
  }

  double norm(std::span<const double> x) const { return std::sqrt((*this)(x, x)); }

  double distance(std::span<const double> x, std::span<const double> y) const {
    require_same_size(x.size(), y.size(), "InnerProduct::distance");
    require_same_size(x.size(), weights_.size(), "InnerProduct::distance");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = x[i] - y[i];
      s += weights_[i] * e * e;
    }
    return std::sqrt(s);
  }

  /// W x, the Riesz map of the weighted product.
  Vector apply_weights(std::span<const double> x) const {
    require_same_size(x.size(), weights_.size(), "InnerProduct::apply_weights");
    Vector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = weights_[i] * x[i];
    return y;
  }

 private:
  Vector weights_;
};

/// A linear map given only through its action.
struct LinearOperator {
  std::size_t dimension = 0;
  std::function<Vector(std::span<const double>)> apply;

  Vector operator()(std::span<const double> x) const {
    require_same_size(x.size(), dimension, "LinearOperator");
    return apply(x);
  }

  static LinearOperator identity(std::size_t n) {
    return {n, [](std::span<const double> x) { return Vector(x.begin(), x.end()); }};
  }
  static LinearOperator from(CsrMatrix A) {
    const std::size_t n = A.n_rows();
    return {n, [A = std::move(A)](std::span<const double> x) { return csr_matvec(A, x); }};
  }
  static LinearOperator from(DenseMatrix A) {
    const std::size_t n = A.rows();
    return {n, [A = std::move(A)](std::span<const double> x) { return A * x; }};
  }
};

}  // namespace deflate
