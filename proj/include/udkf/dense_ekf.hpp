#pragma once

#include "udkf/filter.hpp"

namespace udkf {

// Conventional covariance-form EKF used as a verification oracle for
// the factorized filter. Covariance stays dense; the measurement
// update is the Joseph form, processed as one vector update.
struct DenseEstimate {
  std::vector<double> x_hat;
  Matrix p;
  std::int64_t epoch = 0;
};

struct DenseRun {
  std::vector<DenseEstimate> trajectory;
  std::optional<std::string> error;
  std::optional<std::int64_t> halted_epoch;
};

DenseEstimate dense_initialize(const std::vector<double>& x0, const Matrix& p0);

DenseEstimate dense_time_update(const DenseEstimate& est, const ProcessModel& model,
                                const std::vector<double>& u);

DenseEstimate dense_measurement_update(const DenseEstimate& est, const MeasurementModelSet& models,
                                       const std::vector<double>& y);

DenseRun dense_run_filter(const DenseEstimate& init, const ProcessModel& process,
                          const MeasurementModelSet& meas, const std::vector<EpochInput>& inputs);

// Solves a x = b for square a by Gaussian elimination with partial
// pivoting. Local to the oracle; the factorized filter never inverts.
Matrix dense_solve(const Matrix& a, const Matrix& b);

}  // namespace udkf
