#include "udkf/dense_ekf.hpp"

#include <cmath>

namespace udkf {

Matrix dense_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols() || a.rows() != b.rows()) {
    throw DimensionError("dense_solve: a " + a.shape_str() + " vs b " + b.shape_str());
  }
  const std::size_t n = a.rows();
  Matrix lu = a;
  Matrix x = b;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::fabs(lu(r, col)) > std::fabs(lu(pivot, col))) pivot = r;
    }
    if (lu(pivot, col) == 0.0) {
      throw SingularPivotError("dense_solve: singular matrix at column " + std::to_string(col));
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(lu(col, c), lu(pivot, c));
      for (std::size_t c = 0; c < x.cols(); ++c) std::swap(x(col, c), x(pivot, c));
    }
    const double inv = 1.0 / lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = lu(r, col) * inv;
      if (f == 0.0) continue;
      lu(r, col) = 0.0;
      for (std::size_t c = col + 1; c < n; ++c) lu(r, c) -= f * lu(col, c);
      for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) -= f * x(col, c);
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    const double inv = 1.0 / lu(col, col);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double s = x(col, c);
      for (std::size_t k = col + 1; k < n; ++k) s -= lu(col, k) * x(k, c);
      x(col, c) = s * inv;
    }
  }
  return x;
}

DenseEstimate dense_initialize(const std::vector<double>& x0, const Matrix& p0) {
  if (p0.rows() != x0.size() || p0.cols() != x0.size()) {
    throw DimensionError("dense_initialize: P0 is " + p0.shape_str() + " for state dim " +
                         std::to_string(x0.size()));
  }
  return DenseEstimate{x0, p0, 0};
}

DenseEstimate dense_time_update(const DenseEstimate& est, const ProcessModel& model,
                                const std::vector<double>& u) {
  const Matrix f = model.jacobian_f(est.x_hat, u);
  Matrix p = f * est.p * transpose(f);
  if (model.q_cov) {
    const Matrix g = model.jacobian_g(est.x_hat, u);
    p = p + g * (*model.q_cov) * transpose(g);
  }
  DenseEstimate out;
  out.x_hat = model.propagate_state(est.x_hat, u);
  out.p = std::move(p);
  out.epoch = est.epoch + 1;
  if (!all_finite(out.x_hat)) {
    throw NonFiniteError("dense_time_update: non-finite state at epoch " +
                         std::to_string(out.epoch));
  }
  return out;
}

DenseEstimate dense_measurement_update(const DenseEstimate& est, const MeasurementModelSet& models,
                                       const std::vector<double>& y) {
  const std::size_t n = est.x_hat.size();
  const std::size_t m = models.r_cov.rows();
  if (y.size() != m) {
    throw DimensionError("dense_measurement_update: y length " + std::to_string(y.size()) +
                         " vs R " + models.r_cov.shape_str());
  }
  const Matrix h = models.jacobian_h(est.x_hat);
  const Matrix ph_t = est.p * transpose(h);
  const Matrix s = h * ph_t + models.r_cov;
  // K = P H^T S^{-1} via S^T K^T = (P H^T)^T.
  const Matrix k = transpose(dense_solve(transpose(s), transpose(ph_t)));

  const std::vector<double> y_hat = models.predict(est.x_hat);
  DenseEstimate out;
  out.x_hat = est.x_hat;
  out.epoch = est.epoch;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = 0.0;
    for (std::size_t j = 0; j < m; ++j) dx += k(i, j) * (y[j] - y_hat[j]);
    out.x_hat[i] += dx;
  }
  // Joseph form for numerical hygiene.
  const Matrix i_kh = Matrix::identity(n) - k * h;
  out.p = i_kh * est.p * transpose(i_kh) + k * models.r_cov * transpose(k);
  if (!all_finite(out.x_hat) || !out.p.all_finite()) {
    throw NonFiniteError("dense_measurement_update: non-finite result at epoch " +
                         std::to_string(est.epoch));
  }
  return out;
}

DenseRun dense_run_filter(const DenseEstimate& init, const ProcessModel& process,
                          const MeasurementModelSet& meas, const std::vector<EpochInput>& inputs) {
  DenseRun run;
  run.trajectory.push_back(init);
  DenseEstimate current = init;
  for (const EpochInput& input : inputs) {
    try {
      current = dense_time_update(current, process, input.u);
      if (input.y) {
        current = dense_measurement_update(current, meas, *input.y);
      }
    } catch (const FilterError& e) {
      run.error = e.what();
      run.halted_epoch = current.epoch + 1;
      return run;
    }
    run.trajectory.push_back(current);
  }
  return run;
}

}  // namespace udkf
