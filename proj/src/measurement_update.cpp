#include "udkf/measurement_update.hpp"

#include <cmath>
#include <string>

namespace udkf {

namespace {

void check_scalar_measurement(const UDFactors& prior, const ScalarMeasurement& meas) {
  const std::size_t n = prior.dim();
  if (meas.h_row.size() != n) {
    throw DimensionError("scalar update: H row length " + std::to_string(meas.h_row.size()) +
                         " vs state dim " + std::to_string(n));
  }
  if (!all_finite(meas.h_row) || !std::isfinite(meas.r_scalar) || !std::isfinite(meas.value) ||
      !std::isfinite(meas.predicted)) {
    throw NonFiniteError("scalar update: non-finite measurement input");
  }
  if (meas.r_scalar < 0.0) {
    throw NotPositiveDefiniteError("scalar update: r must be >= 0, got " +
                                   std::to_string(meas.r_scalar));
  }
  if (auto neg = prior.d.first_negative()) {
    throw NegativePriorDError("scalar update: prior D entry " + std::to_string(*neg) +
                              " is negative");
  }
}

double default_tol_alpha(const UDFactors& prior, double r) {
  double trace_scale = 0.0;
  for (std::size_t i = 0; i < prior.dim(); ++i) trace_scale += prior.d[i];
  return 1e-14 * (r + trace_scale);
}

}  // namespace

std::vector<double> solve_unit_upper(const UnitUpperTriangular& u, const std::vector<double>& y) {
  const std::size_t n = u.dim();
  if (y.size() != n) {
    throw DimensionError("solve_unit_upper: rhs length " + std::to_string(y.size()) +
                         " vs dim " + std::to_string(n));
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s -= u.at(ii, j) * x[j];
    x[ii] = s;
  }
  return x;
}

ScalarUpdateResult modified_agee_turner(const UDFactors& prior, const ScalarMeasurement& meas,
                                        std::optional<double> tol_alpha) {
  check_scalar_measurement(prior, meas);
  const std::size_t n = prior.dim();
  const double r = meas.r_scalar;
  const double tol = tol_alpha.value_or(default_tol_alpha(prior, r));

  // w = U-bar^T H^T, v = D-bar w.
  std::vector<double> w = prior.u.transpose_times(meas.h_row);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = prior.d[j] * w[j];

  UnitUpperTriangular u_out = prior.u;
  DiagonalVector d_out(n);
  std::vector<double> k(n, 0.0);

  k[0] = v[0];
  double alpha_prev = r + v[0] * w[0];
  // alpha can only be zero here when r = 0 and d1 w1 = 0; the element
  // is then untouched by the measurement. Ratio-first keeps the
  // no-information case (alpha = r) bit-exact.
  d_out[0] = alpha_prev > 0.0 ? prior.d[0] * (r / alpha_prev) : prior.d[0];

  for (std::size_t j = 1; j < n; ++j) {
    const double alpha_j = alpha_prev + v[j] * w[j];
    if (alpha_j > 0.0) {
      d_out[j] = prior.d[j] * (alpha_prev / alpha_j);
    } else {
      d_out[j] = prior.d[j];
    }
    // With alpha_{j-1} = 0 the running gain is identically zero, so the
    // column correction vanishes whatever lambda would be.
    const double lambda = alpha_prev > 0.0 ? -w[j] / alpha_prev : 0.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double u_old = prior.u.at(i, j);
      u_out.set(i, j, u_old + lambda * k[i]);
      k[i] += v[j] * u_old;
    }
    k[j] = v[j];
    alpha_prev = alpha_j;
  }

  const double alpha_n = alpha_prev;
  if (alpha_n <= tol) {
    throw ZeroInnovationVarianceError("scalar update: innovation variance " +
                                      std::to_string(alpha_n) + " at or below tolerance");
  }
  for (std::size_t i = 0; i < n; ++i) k[i] /= alpha_n;

  ScalarUpdateResult out;
  out.factors = UDFactors(std::move(u_out), std::move(d_out));
  out.gain = std::move(k);
  out.innovation = meas.value - meas.predicted;
  out.innovation_variance = alpha_n;
  return out;
}

ScalarUpdateResult direct_ud_update(const UDFactors& prior, const ScalarMeasurement& meas,
                                    std::optional<double> tol_alpha) {
  check_scalar_measurement(prior, meas);
  const std::size_t n = prior.dim();
  const double r = meas.r_scalar;
  const double tol = tol_alpha.value_or(default_tol_alpha(prior, r));

  std::vector<double> w = prior.u.transpose_times(meas.h_row);
  std::vector<double> v(n);
  double alpha = r;
  for (std::size_t j = 0; j < n; ++j) {
    v[j] = prior.d[j] * w[j];
    alpha += v[j] * w[j];
  }
  if (alpha <= tol) {
    throw ZeroInnovationVarianceError("direct update: innovation variance " +
                                      std::to_string(alpha) + " at or below tolerance");
  }
  const double a_i = 1.0 / alpha;

  // Bracketed term D-bar - D-bar w a_i w^T D-bar; built symmetrically.
  Matrix bracket(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      bracket(i, j) = (i == j ? prior.d[i] : 0.0) - a_i * v[i] * v[j];
    }
  }
  UDFactors inner = udu_decompose(bracket);

  ScalarUpdateResult out;
  out.factors = UDFactors(uut_mul(prior.u, inner.u), inner.d);
  out.gain = prior.u.times(v);
  for (std::size_t i = 0; i < n; ++i) out.gain[i] *= a_i;
  out.innovation = meas.value - meas.predicted;
  out.innovation_variance = alpha;
  return out;
}

UDFactors standard_agee_turner(const RankOneInputs& inputs, std::optional<double> pivot_tol) {
  const std::size_t n = inputs.factors.dim();
  if (inputs.a.size() != n) {
    throw DimensionError("standard_agee_turner: a length " + std::to_string(inputs.a.size()) +
                         " vs dim " + std::to_string(n));
  }
  if (!(inputs.c >= 0.0) || !std::isfinite(inputs.c)) {
    throw NotPositiveDefiniteError("standard_agee_turner: c must be finite and >= 0");
  }
  if (!all_finite(inputs.a)) {
    throw NonFiniteError("standard_agee_turner: a has non-finite entries");
  }

  double tol = 0.0;
  if (pivot_tol.has_value()) {
    tol = *pivot_tol;
  } else {
    double max_d = inputs.factors.d.max_entry();
    tol = 1e-13 * std::max(max_d, inputs.c * dot(inputs.a, inputs.a));
  }

  const UnitUpperTriangular& u_in = inputs.factors.u;
  const DiagonalVector& d_in = inputs.factors.d;
  UnitUpperTriangular u_out = u_in;
  DiagonalVector d_out(n);
  std::vector<double> a = inputs.a;  // mutated in place during the sweep

  double c_j = inputs.c;
  for (std::size_t j = n; j-- > 1;) {
    const double d_plus = d_in[j] + c_j * a[j] * a[j];
    d_out[j] = d_plus;
    for (std::size_t k = 0; k < j; ++k) {
      a[k] -= a[j] * u_in.at(k, j);
      const double num = c_j * a[j] * a[k];
      if (num == 0.0) {
        u_out.set(k, j, u_in.at(k, j));  // bit-exact no-op, no division
      } else if (d_plus <= tol) {
        throw ZeroPivotError("standard_agee_turner: updated diagonal " + std::to_string(j) +
                             " is at or below tolerance but a division by it is required");
      } else {
        u_out.set(k, j, u_in.at(k, j) + num / d_plus);
      }
    }
    // c_j a_j = 0 leaves this diagonal untouched, keeping the running
    // scalar unchanged without dividing 0/0.
    c_j = (c_j * a[j] == 0.0) ? c_j : c_j * d_in[j] / d_plus;
  }
  d_out[0] = d_in[0] + c_j * a[0] * a[0];
  return UDFactors(std::move(u_out), std::move(d_out));
}

DecorrelationTransform build_decorrelation(const Matrix& r_c, double tol) {
  UDFactors f = udu_decompose(r_c);
  for (std::size_t i = 0; i < f.dim(); ++i) {
    if (f.d[i] <= tol) {
      throw NotPositiveDefiniteError("build_decorrelation: D_r entry " + std::to_string(i) +
                                     " = " + std::to_string(f.d[i]) + " is not positive");
    }
  }
  return DecorrelationTransform{std::move(f.u), std::move(f.d)};
}

DecorrelatedMeasurements decorrelate(const DecorrelationTransform& t,
                                     const std::vector<double>& y, const Matrix& h_jac) {
  const std::size_t m = t.dim();
  if (y.size() != m) {
    throw DimensionError("decorrelate: y length " + std::to_string(y.size()) + " vs transform dim " +
                         std::to_string(m));
  }
  if (h_jac.rows() != m) {
    throw DimensionError("decorrelate: H is " + h_jac.shape_str() + " vs transform dim " +
                         std::to_string(m));
  }

  DecorrelatedMeasurements out;
  out.z = solve_unit_upper(t.u_r, y);
  out.h_z = Matrix(m, h_jac.cols());
  std::vector<double> col(m);
  for (std::size_t c = 0; c < h_jac.cols(); ++c) {
    for (std::size_t i = 0; i < m; ++i) col[i] = h_jac(i, c);
    std::vector<double> solved = solve_unit_upper(t.u_r, col);
    for (std::size_t i = 0; i < m; ++i) out.h_z(i, c) = solved[i];
  }
  out.d_r = t.d_r;
  return out;
}

}  // namespace udkf
