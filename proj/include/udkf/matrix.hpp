#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <vector>

#include "udkf/errors.hpp"

namespace udkf {

// Dense row-major matrix sized for filter dimensions (states, noise
// channels, measurements). Not a BLAS substitute.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled

  static Matrix identity(std::size_t n);
  static Matrix diagonal(const std::vector<double>& entries);
  // Validating constructors for user-supplied data: every entry must be
  // finite, shapes must be consistent.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_data(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  bool all_finite() const;
  std::string shape_str() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix mat_mul(const Matrix& a, const Matrix& b);
Matrix mat_add(const Matrix& a, const Matrix& b);
Matrix mat_sub(const Matrix& a, const Matrix& b);
Matrix mat_scale(const Matrix& a, double s);
Matrix transpose(const Matrix& a);

inline Matrix operator*(const Matrix& a, const Matrix& b) { return mat_mul(a, b); }
inline Matrix operator+(const Matrix& a, const Matrix& b) { return mat_add(a, b); }
inline Matrix operator-(const Matrix& a, const Matrix& b) { return mat_sub(a, b); }

std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x);
std::vector<double> matrix_row(const Matrix& a, std::size_t i);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& v);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const std::vector<double>& v);

// Unit upper triangular factor. Only the strict upper triangle is
// stored (packed row by row), so the unit diagonal and the zero lower
// triangle cannot be broken by construction.
class UnitUpperTriangular {
 public:
  UnitUpperTriangular() = default;
  explicit UnitUpperTriangular(std::size_t dim);  // identity

  std::size_t dim() const { return dim_; }

  // Logical element access: 1 on the diagonal, 0 below it.
  double at(std::size_t i, std::size_t j) const {
    if (i == j) return 1.0;
    if (i > j) return 0.0;
    return strict_[offset(i, j)];
  }

  // Only strict upper entries are writable.
  void set(std::size_t i, std::size_t j, double value);

  bool all_finite() const;

  Matrix to_matrix() const;

  // w = U^T x
  std::vector<double> transpose_times(const std::vector<double>& x) const;
  // y = U x
  std::vector<double> times(const std::vector<double>& x) const;

 private:
  std::size_t offset(std::size_t i, std::size_t j) const {
    return i * (dim_ - 1) - i * (i - 1) / 2 + (j - i - 1);
  }

  std::size_t dim_ = 0;
  std::vector<double> strict_;
};

// Product of two unit upper triangular matrices (itself unit upper).
UnitUpperTriangular uut_mul(const UnitUpperTriangular& a, const UnitUpperTriangular& b);

// Diagonal of a D factor. Sign of the entries is the PSD monitor.
class DiagonalVector {
 public:
  DiagonalVector() = default;
  explicit DiagonalVector(std::size_t dim) : entries_(dim, 0.0) {}
  explicit DiagonalVector(std::vector<double> entries);

  std::size_t dim() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  double& operator[](std::size_t i) { return entries_[i]; }
  const std::vector<double>& entries() const { return entries_; }

  // Index of the first negative entry, if any. The sign test is exact.
  std::optional<std::size_t> first_negative() const;
  double max_entry() const;

 private:
  std::vector<double> entries_;
};

// P = U D U^T. The upper triangle is computed and mirrored by copy, so
// the result is bitwise symmetric.
Matrix reconstruct(const UnitUpperTriangular& u, const DiagonalVector& d);

}  // namespace udkf
