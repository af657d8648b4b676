#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "udkf/measurement_update.hpp"
#include "udkf/wmgs.hpp"

namespace udkf {

// Discrete process model x_k = f(x_{k-1}, u_{k-1}, w_{k-1}) with the
// noise argument at its mean. F and G are evaluated at the posterior
// state and the known input. q_cov/jacobian_g are absent when q = 0.
struct ProcessModel {
  std::function<std::vector<double>(const std::vector<double>&, const std::vector<double>&)>
      propagate_state;
  std::function<Matrix(const std::vector<double>&, const std::vector<double>&)> jacobian_f;
  std::function<Matrix(const std::vector<double>&, const std::vector<double>&)> jacobian_g;
  std::optional<Matrix> q_cov;
};

// Measurement batch y = h(x) + v with cov(v) = r_cov (diagonal or
// correlated).
struct MeasurementModelSet {
  std::function<std::vector<double>(const std::vector<double>&)> predict;
  std::function<Matrix(const std::vector<double>&)> jacobian_h;
  Matrix r_cov;
};

struct StateEstimate {
  std::vector<double> x_hat;
  UDFactors factors;
  std::int64_t epoch = 0;
};

struct NegativeDEvent {
  std::int64_t epoch;
  std::size_t index;
  double value;
};

struct InnovationRecord {
  std::int64_t epoch;
  std::size_t meas_index;
  double innovation;
  double innovation_variance;
};

struct DegenerateDirectionEvent {
  std::int64_t epoch;
  std::size_t index;
};

// Append-only health log across a run.
struct FilterDiagnostics {
  std::vector<std::pair<std::int64_t, bool>> psd_flags;  // one per step
  std::vector<NegativeDEvent> negative_d_events;
  std::vector<InnovationRecord> innovations;
  std::vector<DegenerateDirectionEvent> degenerate_directions;

  void append(const FilterDiagnostics& delta);
  void record_psd(std::int64_t epoch, const UDFactors& f);
};

struct FilterOptions {
  // Re-evaluate h at the running state between scalar updates instead
  // of the default linear correction H_i (x_cur - x_minus) around the
  // single prior evaluation.
  bool reevaluate_h = false;
  // R counts as diagonal when every off-diagonal entry is within
  // r_offdiag_tol * max diagonal entry.
  double r_offdiag_tol = 1e-12;
};

struct MeasurementUpdateResult {
  StateEstimate estimate;
  FilterDiagnostics delta;
};

// Decorrelation transform reuse across epochs: rebuilt only when the R
// content actually changes.
struct DecorrelationCache {
  std::optional<Matrix> r;
  std::optional<DecorrelationTransform> transform;
};

struct EpochInput {
  std::vector<double> u;                   // known input (may be empty)
  std::optional<std::vector<double>> y;    // absent = propagate only
};

struct FilterRun {
  std::vector<StateEstimate> trajectory;   // [init, post_1, ..., post_T]
  FilterDiagnostics diagnostics;
  std::optional<std::string> error;        // first hard error, if any
  std::optional<std::int64_t> halted_epoch;
};

// udu(P0) at epoch 0.
StateEstimate initialize(const std::vector<double>& x0, const Matrix& p0);

// State through f, factors through the WMGS propagation, epoch + 1.
StateEstimate time_update(const StateEstimate& est, const ProcessModel& model,
                          const std::vector<double>& u, FilterDiagnostics* diag = nullptr);

// Sequential scalar processing of the batch y. A correlated R is
// decorrelated first. Each gain is applied to the running state
// immediately.
MeasurementUpdateResult measurement_update(const StateEstimate& est,
                                           const MeasurementModelSet& models,
                                           const std::vector<double>& y,
                                           const FilterOptions& options = {},
                                           DecorrelationCache* cache = nullptr);

// Alternating time and measurement updates over the input sequence.
// Halts at the first hard error with the partial trajectory returned.
FilterRun run_filter(const StateEstimate& init, const ProcessModel& process,
                     const MeasurementModelSet& meas, const std::vector<EpochInput>& inputs,
                     const FilterOptions& options = {});

}  // namespace udkf
