#pragma once

#include <optional>
#include <vector>

#include "udkf/ud_factorization.hpp"

namespace udkf {

// One scalar measurement channel: Jacobian row, noise variance, the
// observed value, and the prediction at the linearization point.
struct ScalarMeasurement {
  std::vector<double> h_row;
  double r_scalar = 0.0;  // >= 0
  double value = 0.0;
  double predicted = 0.0;
};

struct ScalarUpdateResult {
  UDFactors factors;                  // U+, D+
  std::vector<double> gain;           // K
  double innovation = 0.0;            // value - predicted
  double innovation_variance = 0.0;   // H P-bar H^T + r
};

// Rank-one information c a a^T to be folded into existing factors.
struct RankOneInputs {
  UDFactors factors;
  double c = 0.0;  // >= 0; c = 0 is the no-op boundary
  std::vector<double> a;
};

// U_r, D_r factors of a correlated measurement noise covariance R_c.
struct DecorrelationTransform {
  UnitUpperTriangular u_r;
  DiagonalVector d_r;

  std::size_t dim() const { return u_r.dim(); }
};

struct DecorrelatedMeasurements {
  std::vector<double> z;  // U_r^{-1} y
  Matrix h_z;             // U_r^{-1} H
  DiagonalVector d_r;     // diagonal noise for sequential processing
};

// Back-substitution solve of U x = y for unit upper triangular U.
// U is never inverted explicitly, and no division is needed.
std::vector<double> solve_unit_upper(const UnitUpperTriangular& u, const std::vector<double>& y);

// Bierman-style stabilized rank-one downdate of the UD factors by one
// scalar measurement; returns the updated factors, the Kalman gain
// column, and the innovation with its variance.
ScalarUpdateResult modified_agee_turner(const UDFactors& prior, const ScalarMeasurement& meas,
                                        std::optional<double> tol_alpha = std::nullopt);

// Reference update path: factor the bracketed term of
//   P+ = U-bar [ D-bar - D-bar w a_i w^T D-bar ] U-bar^T
// with a fresh UD decomposition and compose U+ = U-bar * U-script.
// Same contract as modified_agee_turner; exists to cross-validate it.
ScalarUpdateResult direct_ud_update(const UDFactors& prior, const ScalarMeasurement& meas,
                                    std::optional<double> tol_alpha = std::nullopt);

// Agee-Turner rank-one update: returns factors of U D U^T + c a a^T.
// Library primitive; the filter's measurement path uses the modified
// variant above (this one degrades when the update term is negative).
UDFactors standard_agee_turner(const RankOneInputs& inputs,
                               std::optional<double> pivot_tol = std::nullopt);

// Factors R_c = U_r D_r U_r^T for decorrelation; every D_r entry must
// exceed tol.
DecorrelationTransform build_decorrelation(const Matrix& r_c, double tol = 0.0);

// Transforms a measurement batch so its noise covariance becomes the
// diagonal D_r: z = U_r^{-1} y, H_z = U_r^{-1} H, both by
// back-substitution column by column.
DecorrelatedMeasurements decorrelate(const DecorrelationTransform& t,
                                     const std::vector<double>& y, const Matrix& h_jac);

}  // namespace udkf
