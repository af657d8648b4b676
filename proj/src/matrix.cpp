#include "udkf/matrix.hpp"

#include <cmath>
#include <sstream>

namespace udkf {

namespace {

std::string shape_of(std::size_t r, std::size_t c) {
  std::ostringstream os;
  os << r << "x" << c;
  return os.str();
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) {
    throw DimensionError("Matrix: rows and cols must be >= 1, got " + shape_of(rows, cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(const std::vector<double>& entries) {
  Matrix m(entries.size(), entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (!std::isfinite(entries[i])) {
      throw NonFiniteError("Matrix::diagonal: non-finite entry at index " + std::to_string(i));
    }
    m(i, i) = entries[i];
  }
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  if (r == 0) throw DimensionError("Matrix::from_rows: no rows given");
  const std::size_t c = rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) {
      throw DimensionError("Matrix::from_rows: ragged rows (" + std::to_string(row.size()) +
                           " vs " + std::to_string(c) + " entries)");
    }
    for (double v : row) data.push_back(v);
  }
  return from_data(r, c, std::move(data));
}

Matrix Matrix::from_data(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw DimensionError("Matrix::from_data: " + std::to_string(data.size()) +
                         " entries for shape " + shape_of(rows, cols));
  }
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw NonFiniteError("Matrix::from_data: non-finite entry at flat index " + std::to_string(i));
    }
  }
  m.data_ = std::move(data);
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Matrix::shape_str() const { return shape_of(rows_, cols_); }

Matrix mat_mul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("mat_mul: lhs " + a.shape_str() + " does not conform with rhs " + b.shape_str());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  return out;
}

Matrix mat_add(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mat_add: " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

Matrix mat_sub(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("mat_sub: " + a.shape_str() + " vs " + b.shape_str());
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) - b(i, j);
  return out;
}

Matrix mat_scale(const Matrix& a, double s) {
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) * s;
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

std::vector<double> mat_vec(const Matrix& a, const std::vector<double>& x) {
  if (a.cols() != x.size()) {
    throw DimensionError("mat_vec: matrix " + a.shape_str() + " vs vector length " +
                         std::to_string(x.size()));
  }
  std::vector<double> out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    out[i] = s;
  }
  return out;
}

std::vector<double> matrix_row(const Matrix& a, std::size_t i) {
  std::vector<double> out(a.cols());
  for (std::size_t j = 0; j < a.cols(); ++j) out[j] = a(i, j);
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("dot: lengths " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::fabs(v));
  return m;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

UnitUpperTriangular::UnitUpperTriangular(std::size_t dim)
    : dim_(dim), strict_(dim > 0 ? dim * (dim - 1) / 2 : 0, 0.0) {
  if (dim == 0) {
    throw DimensionError("UnitUpperTriangular: dim must be >= 1");
  }
}

void UnitUpperTriangular::set(std::size_t i, std::size_t j, double value) {
  if (i >= j || j >= dim_) {
    throw DimensionError("UnitUpperTriangular::set: (" + std::to_string(i) + "," +
                         std::to_string(j) + ") is not a strict upper entry of dim " +
                         std::to_string(dim_));
  }
  strict_[offset(i, j)] = value;
}

bool UnitUpperTriangular::all_finite() const {
  for (double v : strict_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix UnitUpperTriangular::to_matrix() const {
  Matrix m = Matrix::identity(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j) m(i, j) = strict_[offset(i, j)];
  return m;
}

std::vector<double> UnitUpperTriangular::transpose_times(const std::vector<double>& x) const {
  if (x.size() != dim_) {
    throw DimensionError("UnitUpperTriangular::transpose_times: vector length " +
                         std::to_string(x.size()) + " vs dim " + std::to_string(dim_));
  }
  std::vector<double> w(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s += at(k, i) * x[k];
    w[i] = s;
  }
  return w;
}

std::vector<double> UnitUpperTriangular::times(const std::vector<double>& x) const {
  if (x.size() != dim_) {
    throw DimensionError("UnitUpperTriangular::times: vector length " +
                         std::to_string(x.size()) + " vs dim " + std::to_string(dim_));
  }
  std::vector<double> y(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = x[i];
    for (std::size_t k = i + 1; k < dim_; ++k) s += at(i, k) * x[k];
    y[i] = s;
  }
  return y;
}

UnitUpperTriangular uut_mul(const UnitUpperTriangular& a, const UnitUpperTriangular& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("uut_mul: dims " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
  const std::size_t n = a.dim();
  UnitUpperTriangular out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = i; k <= j; ++k) s += a.at(i, k) * b.at(k, j);
      out.set(i, j, s);
    }
  }
  return out;
}

DiagonalVector::DiagonalVector(std::vector<double> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!std::isfinite(entries_[i])) {
      throw NonFiniteError("DiagonalVector: non-finite entry at index " + std::to_string(i));
    }
  }
}

std::optional<std::size_t> DiagonalVector::first_negative() const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] < 0.0) return i;
  }
  return std::nullopt;
}

double DiagonalVector::max_entry() const {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, v);
  return m;
}

Matrix reconstruct(const UnitUpperTriangular& u, const DiagonalVector& d) {
  if (u.dim() != d.dim()) {
    throw DimensionError("reconstruct: U dim " + std::to_string(u.dim()) + " vs D dim " +
                         std::to_string(d.dim()));
  }
  const std::size_t n = u.dim();
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      // U(i,k) is nonzero for k >= i and U(j,k) for k >= j; with j >= i
      // the sum runs from k = j.
      double s = 0.0;
      for (std::size_t k = j; k < n; ++k) s += u.at(i, k) * d[k] * u.at(j, k);
      p(i, j) = s;
      p(j, i) = s;
    }
  }
  return p;
}

}  // namespace udkf
