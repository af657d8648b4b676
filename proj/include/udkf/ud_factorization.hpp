#pragma once

#include <optional>

#include "udkf/matrix.hpp"

namespace udkf {

// Covariance in factored form, P = U D U^T.
struct UDFactors {
  UnitUpperTriangular u;
  DiagonalVector d;

  UDFactors() = default;
  UDFactors(UnitUpperTriangular u_in, DiagonalVector d_in);

  std::size_t dim() const { return u.dim(); }
  static UDFactors identity(std::size_t n);
};

struct PsdStatus {
  bool psd = true;
  // First index with d < 0, when not PSD.
  std::optional<std::size_t> first_negative;
};

// Sign check of the D entries. Exact; no tolerance.
PsdStatus is_psd(const UDFactors& f);

inline constexpr double kDefaultSymmetryTol = 1e-9;

// UD decomposition of a symmetric positive-(semi)definite matrix.
//
// Columns are processed right to left (j = n-1 .. 0), each column from
// the diagonal upward, consuming only factors already written by later
// columns. No square root is evaluated.
//
// sym_tol is relative: max abs asymmetry <= sym_tol * max abs entry.
// pivot_tol defaults to 1e-13 * max diagonal entry. A pivot at or below
// pivot_tol is accepted only when its whole column is also negligible
// (that column of U is zeroed, supporting semi-definite inputs);
// otherwise SingularPivotError is thrown.
UDFactors udu_decompose(const Matrix& m, double sym_tol = kDefaultSymmetryTol,
                        std::optional<double> pivot_tol = std::nullopt);

}  // namespace udkf
