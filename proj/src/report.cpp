#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "udkf/scenario.hpp"

namespace udkf {

namespace {

// %.17g round-trips IEEE doubles and keeps output byte-stable.
std::string fmt(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data());
}

const char* mode_name(FilterMode mode) {
  switch (mode) {
    case FilterMode::kUd: return "ud";
    case FilterMode::kDense: return "dense";
    case FilterMode::kBoth: return "both";
  }
  return "?";
}

double relative_state_divergence(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return norm2(diff) / std::max(1.0, norm2(b));
}

double relative_cov_divergence(const Matrix& a, const Matrix& b) {
  return frobenius_norm(a - b) / std::max(1e-12, frobenius_norm(b));
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();

  RunReport report;
  report.model = cfg.model;
  report.steps = cfg.steps;
  report.seed = cfg.seed;
  report.mode = cfg.mode;

  const ScenarioSystem sys = build_system(cfg);
  const std::vector<EpochInput> inputs = simulate_inputs(cfg, sys);

  FilterOptions options;
  options.reevaluate_h = cfg.relinearize;

  std::optional<FilterRun> ud_run;
  std::optional<DenseRun> dense_run;
  try {
    if (cfg.mode != FilterMode::kDense) {
      ud_run = run_filter(initialize(sys.x0, sys.p0), sys.process, sys.meas, inputs, options);
      if (ud_run->error) {
        report.error = ud_run->error;
        report.halted_epoch = ud_run->halted_epoch;
      }
    }
    if (cfg.mode != FilterMode::kUd) {
      dense_run = dense_run_filter(dense_initialize(sys.x0, sys.p0), sys.process, sys.meas, inputs);
      if (dense_run->error && !report.error) {
        report.error = dense_run->error;
        report.halted_epoch = dense_run->halted_epoch;
      }
    }
  } catch (const FilterError& e) {
    // Initialization failures (e.g. a P0 that will not factor).
    report.error = e.what();
    report.halted_epoch = 0;
  }

  if (ud_run) {
    std::size_t innov_cursor = 0;
    const auto& innovations = ud_run->diagnostics.innovations;
    for (const StateEstimate& est : ud_run->trajectory) {
      StepRecord rec;
      rec.epoch = est.epoch;
      rec.x = est.x_hat;
      rec.d = est.factors.d.entries();
      rec.psd = !est.factors.d.first_negative().has_value();
      while (innov_cursor < innovations.size() && innovations[innov_cursor].epoch == est.epoch) {
        rec.innovations.push_back(innovations[innov_cursor].innovation);
        rec.innovation_variances.push_back(innovations[innov_cursor].innovation_variance);
        ++innov_cursor;
      }
      report.records.push_back(std::move(rec));
    }
    report.negative_d_count = ud_run->diagnostics.negative_d_events.size();
    report.degenerate_direction_count = ud_run->diagnostics.degenerate_directions.size();
  } else if (dense_run) {
    for (const DenseEstimate& est : dense_run->trajectory) {
      StepRecord rec;
      rec.epoch = est.epoch;
      rec.x = est.x_hat;
      rec.d.resize(est.x_hat.size());
      rec.psd = true;
      for (std::size_t i = 0; i < rec.d.size(); ++i) {
        rec.d[i] = est.p(i, i);
        if (rec.d[i] < 0.0) rec.psd = false;
      }
      report.records.push_back(std::move(rec));
    }
  }

  if (dense_run) {
    for (const DenseEstimate& est : dense_run->trajectory) {
      double asym = 0.0;
      for (std::size_t i = 0; i < est.p.rows(); ++i)
        for (std::size_t j = i + 1; j < est.p.cols(); ++j)
          asym = std::max(asym, std::fabs(est.p(i, j) - est.p(j, i)));
      report.max_dense_asymmetry =
          std::max(report.max_dense_asymmetry, asym / std::max(1e-300, max_abs(est.p)));
    }
  }

  if (ud_run && dense_run) {
    const std::size_t count = std::min(ud_run->trajectory.size(), dense_run->trajectory.size());
    for (std::size_t k = 0; k < count; ++k) {
      const double sd = relative_state_divergence(ud_run->trajectory[k].x_hat,
                                                  dense_run->trajectory[k].x_hat);
      const double cd = relative_cov_divergence(
          reconstruct(ud_run->trajectory[k].factors.u, ud_run->trajectory[k].factors.d),
          dense_run->trajectory[k].p);
      report.state_divergence.push_back(sd);
      report.cov_divergence.push_back(cd);
      report.max_state_divergence = std::max(report.max_state_divergence, sd);
      report.max_cov_divergence = std::max(report.max_cov_divergence, cd);
    }
  }

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

void write_trajectory_csv(const RunReport& report, std::ostream& os) {
  os << "# " << kTrajectorySchema << "\n";
  const std::size_t n = report.records.empty() ? 0 : report.records.front().x.size();
  os << "epoch";
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i;
  for (std::size_t i = 0; i < n; ++i) os << ",d" << i;
  os << ",psd\n";
  for (const StepRecord& rec : report.records) {
    os << rec.epoch;
    for (double v : rec.x) os << "," << fmt(v);
    for (double v : rec.d) os << "," << fmt(v);
    os << "," << (rec.psd ? 1 : 0) << "\n";
  }
}

void write_divergence_csv(const RunReport& report, std::ostream& os) {
  os << "# " << kDivergenceSchema << "\n";
  os << "epoch,state_divergence,cov_divergence\n";
  for (std::size_t k = 0; k < report.state_divergence.size(); ++k) {
    os << k << "," << fmt(report.state_divergence[k]) << "," << fmt(report.cov_divergence[k])
       << "\n";
  }
}

void write_summary(const RunReport& report, std::ostream& os) {
  os << "schema: " << kSummarySchema << "\n";
  os << "model: " << report.model << "\n";
  os << "steps: " << report.steps << "\n";
  os << "seed: " << report.seed << "\n";
  os << "mode: " << mode_name(report.mode) << "\n";
  os << "records: " << report.records.size() << "\n";
  os << "negative_d_events: " << report.negative_d_count << "\n";
  os << "degenerate_directions: " << report.degenerate_direction_count << "\n";
  if (report.mode == FilterMode::kBoth) {
    os << "max_state_divergence: " << fmt(report.max_state_divergence) << "\n";
    os << "max_cov_divergence: " << fmt(report.max_cov_divergence) << "\n";
  }
  if (report.mode != FilterMode::kUd) {
    os << "max_dense_asymmetry: " << fmt(report.max_dense_asymmetry) << "\n";
  }
  os << "halted_epoch: ";
  if (report.halted_epoch) os << *report.halted_epoch;
  else os << "none";
  os << "\n";
  os << "error: " << (report.error ? *report.error : std::string("none")) << "\n";
}

void write_report_files(const RunReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream os(fs::path(out_dir) / "trajectory.csv", std::ios::binary);
    write_trajectory_csv(report, os);
  }
  if (report.mode == FilterMode::kBoth) {
    std::ofstream os(fs::path(out_dir) / "divergence.csv", std::ios::binary);
    write_divergence_csv(report, os);
  }
  {
    std::ofstream os(fs::path(out_dir) / "summary.txt", std::ios::binary);
    write_summary(report, os);
  }
}

}  // namespace udkf
