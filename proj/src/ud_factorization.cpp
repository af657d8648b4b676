#include "udkf/ud_factorization.hpp"

#include <cmath>
#include <string>

namespace udkf {

UDFactors::UDFactors(UnitUpperTriangular u_in, DiagonalVector d_in)
    : u(std::move(u_in)), d(std::move(d_in)) {
  if (u.dim() != d.dim()) {
    throw DimensionError("UDFactors: U dim " + std::to_string(u.dim()) + " vs D dim " +
                         std::to_string(d.dim()));
  }
}

UDFactors UDFactors::identity(std::size_t n) {
  DiagonalVector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 1.0;
  return UDFactors(UnitUpperTriangular(n), d);
}

PsdStatus is_psd(const UDFactors& f) {
  PsdStatus status;
  status.first_negative = f.d.first_negative();
  status.psd = !status.first_negative.has_value();
  return status;
}

UDFactors udu_decompose(const Matrix& m, double sym_tol, std::optional<double> pivot_tol) {
  if (m.rows() != m.cols()) {
    throw DimensionError("udu_decompose: matrix must be square, got " + m.shape_str());
  }
  if (!m.all_finite()) {
    throw NonFiniteError("udu_decompose: input has non-finite entries");
  }
  const std::size_t n = m.rows();

  // Symmetry is checked, not silently repaired.
  const double scale = max_abs(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::fabs(m(i, j) - m(j, i)) > sym_tol * scale) {
        throw NotSymmetricError("udu_decompose: asymmetry at (" + std::to_string(i) + "," +
                                std::to_string(j) + ") exceeds tolerance");
      }
    }
  }

  double tol_pivot = 0.0;
  if (pivot_tol.has_value()) {
    tol_pivot = *pivot_tol;
  } else {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::fabs(m(i, i)));
    tol_pivot = 1e-13 * max_diag;
  }

  UnitUpperTriangular u(n);
  DiagonalVector d(n);

  for (std::size_t jj = n; jj-- > 0;) {
    const std::size_t j = jj;
    // Diagonal first (i = j), then the column above it.
    for (std::size_t ii = j + 1; ii-- > 0;) {
      const std::size_t i = ii;
      double sigma = m(i, j);
      for (std::size_t k = j + 1; k < n; ++k) {
        sigma -= u.at(i, k) * d[k] * u.at(j, k);
      }
      if (i == j) {
        d[j] = sigma;
      } else if (d[j] > tol_pivot) {
        u.set(i, j, sigma / d[j]);
      } else {
        // Zero pivot: the column must be negligible too, otherwise the
        // matrix is not positive semi-definite at working precision.
        if (std::fabs(sigma) > tol_pivot) {
          throw SingularPivotError("udu_decompose: pivot D(" + std::to_string(j) + "," +
                                   std::to_string(j) + ") = " + std::to_string(d[j]) +
                                   " is at or below tolerance but U(" + std::to_string(i) + "," +
                                   std::to_string(j) + ") needs it");
        }
        u.set(i, j, 0.0);
      }
    }
  }
  return UDFactors(std::move(u), std::move(d));
}

}  // namespace udkf
