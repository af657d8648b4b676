#include "udkf/filter.hpp"

#include <cmath>

namespace udkf {

namespace {

bool r_is_diagonal(const Matrix& r, double rel_tol) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < r.rows(); ++i) max_diag = std::max(max_diag, std::fabs(r(i, i)));
  const double tol = rel_tol * max_diag;
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j)
      if (i != j && std::fabs(r(i, j)) > tol) return false;
  return true;
}

bool same_content(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

void FilterDiagnostics::append(const FilterDiagnostics& delta) {
  psd_flags.insert(psd_flags.end(), delta.psd_flags.begin(), delta.psd_flags.end());
  negative_d_events.insert(negative_d_events.end(), delta.negative_d_events.begin(),
                           delta.negative_d_events.end());
  innovations.insert(innovations.end(), delta.innovations.begin(), delta.innovations.end());
  degenerate_directions.insert(degenerate_directions.end(), delta.degenerate_directions.begin(),
                               delta.degenerate_directions.end());
}

void FilterDiagnostics::record_psd(std::int64_t epoch, const UDFactors& f) {
  bool ok = true;
  for (std::size_t i = 0; i < f.dim(); ++i) {
    if (f.d[i] < 0.0) {
      negative_d_events.push_back({epoch, i, f.d[i]});
      ok = false;
    }
  }
  psd_flags.emplace_back(epoch, ok);
}

StateEstimate initialize(const std::vector<double>& x0, const Matrix& p0) {
  if (p0.rows() != x0.size() || p0.cols() != x0.size()) {
    throw DimensionError("initialize: P0 is " + p0.shape_str() + " for state dim " +
                         std::to_string(x0.size()));
  }
  if (!all_finite(x0)) {
    throw NonFiniteError("initialize: x0 has non-finite entries");
  }
  StateEstimate est;
  est.x_hat = x0;
  est.factors = udu_decompose(p0);
  est.epoch = 0;
  return est;
}

StateEstimate time_update(const StateEstimate& est, const ProcessModel& model,
                          const std::vector<double>& u, FilterDiagnostics* diag) {
  PropagationInputs inputs;
  inputs.f_jac = model.jacobian_f(est.x_hat, u);
  if (model.q_cov) {
    inputs.g_map = model.jacobian_g(est.x_hat, u);
    inputs.q_cov = model.q_cov;
  }
  inputs.prior = est.factors;

  StateEstimate out;
  std::vector<std::size_t> events;
  out.factors = propagate_factors(inputs, &events);
  out.x_hat = model.propagate_state(est.x_hat, u);
  out.epoch = est.epoch + 1;
  if (!all_finite(out.x_hat) || !all_finite(out.factors.d.entries()) ||
      !out.factors.u.all_finite()) {
    throw NonFiniteError("time_update: non-finite state or factors at epoch " +
                         std::to_string(out.epoch));
  }
  if (diag != nullptr) {
    for (std::size_t idx : events) diag->degenerate_directions.push_back({out.epoch, idx});
  }
  return out;
}

MeasurementUpdateResult measurement_update(const StateEstimate& est,
                                           const MeasurementModelSet& models,
                                           const std::vector<double>& y,
                                           const FilterOptions& options,
                                           DecorrelationCache* cache) {
  const std::size_t m = models.r_cov.rows();
  if (models.r_cov.cols() != m || y.size() != m) {
    throw DimensionError("measurement_update: y length " + std::to_string(y.size()) + " vs R " +
                         models.r_cov.shape_str());
  }

  const std::vector<double> x_minus = est.x_hat;
  std::vector<double> y_hat0 = models.predict(x_minus);
  Matrix h = models.jacobian_h(x_minus);
  if (y_hat0.size() != m || h.rows() != m || h.cols() != x_minus.size()) {
    throw DimensionError("measurement_update: model output shapes do not conform (h " +
                         h.shape_str() + ", prediction length " + std::to_string(y_hat0.size()) +
                         ")");
  }

  // Correlated R: transform measurements, Jacobian, and predictions so
  // the scalar loop below sees diagonal noise.
  const bool correlated = !r_is_diagonal(models.r_cov, options.r_offdiag_tol);
  std::optional<DecorrelationTransform> transform;
  std::vector<double> z = y;
  Matrix h_z = h;
  DiagonalVector noise(m);
  std::vector<double> z_hat0 = y_hat0;
  if (correlated) {
    if (cache != nullptr && cache->transform && cache->r && same_content(*cache->r, models.r_cov)) {
      transform = cache->transform;
    } else {
      transform = build_decorrelation(models.r_cov);
      if (cache != nullptr) {
        cache->r = models.r_cov;
        cache->transform = transform;
      }
    }
    DecorrelatedMeasurements dm = decorrelate(*transform, y, h);
    z = std::move(dm.z);
    h_z = std::move(dm.h_z);
    noise = std::move(dm.d_r);
    z_hat0 = solve_unit_upper(transform->u_r, y_hat0);
  } else {
    for (std::size_t i = 0; i < m; ++i) noise[i] = models.r_cov(i, i);
  }

  MeasurementUpdateResult out;
  out.estimate.x_hat = x_minus;
  out.estimate.factors = est.factors;
  out.estimate.epoch = est.epoch;

  for (std::size_t i = 0; i < m; ++i) {
    ScalarMeasurement scalar;
    scalar.h_row = matrix_row(h_z, i);
    scalar.r_scalar = noise[i];
    scalar.value = z[i];
    if (options.reevaluate_h && i > 0) {
      std::vector<double> pred = models.predict(out.estimate.x_hat);
      if (correlated) pred = solve_unit_upper(transform->u_r, pred);
      scalar.predicted = pred[i];
    } else {
      // Prior prediction plus the linear correction for the state
      // motion accumulated by the earlier scalar updates this epoch.
      double correction = 0.0;
      for (std::size_t j = 0; j < x_minus.size(); ++j) {
        correction += scalar.h_row[j] * (out.estimate.x_hat[j] - x_minus[j]);
      }
      scalar.predicted = z_hat0[i] + correction;
    }

    ScalarUpdateResult res = modified_agee_turner(out.estimate.factors, scalar);
    for (std::size_t j = 0; j < out.estimate.x_hat.size(); ++j) {
      out.estimate.x_hat[j] += res.gain[j] * res.innovation;
    }
    if (!all_finite(out.estimate.x_hat) || !std::isfinite(res.innovation)) {
      throw NonFiniteError("measurement_update: non-finite intermediate at epoch " +
                           std::to_string(est.epoch) + ", measurement " + std::to_string(i));
    }
    out.estimate.factors = std::move(res.factors);
    out.delta.innovations.push_back(
        {est.epoch, i, res.innovation, res.innovation_variance});
  }
  out.delta.record_psd(est.epoch, out.estimate.factors);
  return out;
}

FilterRun run_filter(const StateEstimate& init, const ProcessModel& process,
                     const MeasurementModelSet& meas, const std::vector<EpochInput>& inputs,
                     const FilterOptions& options) {
  FilterRun run;
  run.trajectory.push_back(init);
  run.diagnostics.record_psd(init.epoch, init.factors);

  StateEstimate current = init;
  DecorrelationCache cache;
  for (const EpochInput& input : inputs) {
    try {
      current = time_update(current, process, input.u, &run.diagnostics);
      if (input.y) {
        MeasurementUpdateResult mu = measurement_update(current, meas, *input.y, options, &cache);
        current = std::move(mu.estimate);
        run.diagnostics.append(mu.delta);
      } else {
        run.diagnostics.record_psd(current.epoch, current.factors);
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
