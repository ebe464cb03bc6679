#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dropfact {

/// Dense real matrix stored in row-major order.
///
/// Construction from a data buffer rejects NaN/Inf entries and a buffer whose
/// length is not rows*cols. Element writes through operator() are unchecked.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static DenseMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }
  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::vector<double> column(std::size_t j) const;

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  DenseMatrix transposed() const;

  /// True when every entry is finite.
  bool all_finite() const noexcept;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double alpha, const DenseMatrix& a);

/// a * b
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// a * b^T, the shape of U V^T.
DenseMatrix matmul_transposed(const DenseMatrix& a, const DenseMatrix& b);

double frobenius_norm_squared(const DenseMatrix& a);
double frobenius_norm(const DenseMatrix& a);

/// Squared Euclidean norm of every column, accumulated row by row.
std::vector<double> column_norms_squared(const DenseMatrix& a);

/// Factor pair (U: m x d, V: n x d) sharing the width d >= 1.
class FactorPair {
 public:
  FactorPair(DenseMatrix u, DenseMatrix v);

  const DenseMatrix& u() const noexcept { return u_; }
  const DenseMatrix& v() const noexcept { return v_; }
  DenseMatrix& u() noexcept { return u_; }
  DenseMatrix& v() noexcept { return v_; }

  std::size_t width() const noexcept { return u_.cols(); }
  std::size_t rows_u() const noexcept { return u_.rows(); }
  std::size_t rows_v() const noexcept { return v_.rows(); }

  /// k-th column of U, 0-based.
  std::vector<double> u_col(std::size_t k) const { return u_.column(k); }
  /// k-th column of V, 0-based.
  std::vector<double> v_col(std::size_t k) const { return v_.column(k); }

  /// U V^T
  DenseMatrix product() const { return matmul_transposed(u_, v_); }

  friend bool operator==(const FactorPair&, const FactorPair&) = default;

 private:
  DenseMatrix u_;
  DenseMatrix v_;
};

}  // namespace dropfact
