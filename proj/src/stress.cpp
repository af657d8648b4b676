#include "udkf/stress.hpp"

#include <cmath>
#include <ostream>
#include <thread>

#include "udkf/measurement_update.hpp"
#include "udkf/sampling.hpp"

namespace udkf {

namespace {

constexpr std::size_t kStateDim = 4;
constexpr std::size_t kMeasRounds = 5;

// Cyclic Jacobi sweep; plenty for 4x4 symmetric matrices.
double min_eigenvalue_symmetric(Matrix a) {
  const std::size_t n = a.rows();
  const double scale = max_abs(a);
  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off <= 1e-30 * scale * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double min_eig = a(0, 0);
  for (std::size_t i = 1; i < n; ++i) min_eig = std::min(min_eig, a(i, i));
  return min_eig;
}

struct TrialOutcome {
  bool ud_anomaly = false;
  bool dense_anomaly = false;
  bool degenerate = false;
};

TrialOutcome run_trial(std::uint64_t seed, int exponent) {
  PortableRng rng(seed);
  const std::size_t n = kStateDim;

  // Eigenvalues spread over 10^-exponent, random orientation.
  const Matrix rot = random_orthogonal(rng, n);
  std::vector<double> eigs(n);
  for (std::size_t i = 0; i < n; ++i) {
    eigs[i] = std::pow(10.0, -static_cast<double>(exponent) * static_cast<double>(i) /
                                 static_cast<double>(n - 1));
  }
  const Matrix b = rot * Matrix::diagonal(eigs) * transpose(rot);
  Matrix p0(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p0(i, j) = 0.5 * (b(i, j) + b(j, i));

  // Strong measurements: noise far below even the smallest eigenvalue.
  const double r = 1e-8 * std::pow(10.0, -exponent);
  std::vector<std::vector<double>> h_rows;
  for (std::size_t k = 0; k + 1 < kMeasRounds; ++k) h_rows.push_back(random_unit_row(rng, n));
  h_rows.push_back(h_rows.front());  // repeated strong measurement

  TrialOutcome outcome;

  // Factorized side.
  try {
    UDFactors factors = udu_decompose(p0);
    for (const auto& h : h_rows) {
      ScalarMeasurement meas;
      meas.h_row = h;
      meas.r_scalar = r;
      ScalarUpdateResult res = modified_agee_turner(factors, meas);
      factors = std::move(res.factors);
      if (factors.d.first_negative()) {
        outcome.ud_anomaly = true;
        break;
      }
    }
  } catch (const FilterError&) {
    outcome.degenerate = true;
  }

  // Naive dense side: P <- (I - K H) P, no Joseph form, no symmetry
  // repair.
  Matrix p = p0;
  for (const auto& h : h_rows) {
    std::vector<double> ph(n, 0.0);  // P H^T
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) ph[i] += p(i, j) * h[j];
    double s = r;
    for (std::size_t i = 0; i < n; ++i) s += h[i] * ph[i];
    std::vector<double> hp(n, 0.0);  // H P
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i < n; ++i) hp[j] += h[i] * p(i, j);
    for (std::size_t i = 0; i < n; ++i) {
      const double k_i = ph[i] / s;
      for (std::size_t j = 0; j < n; ++j) p(i, j) -= k_i * hp[j];
    }
    Matrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) sym(i, j) = 0.5 * (p(i, j) + p(j, i));
    if (min_eigenvalue_symmetric(sym) < 0.0) {
      outcome.dense_anomaly = true;
      break;
    }
  }
  return outcome;
}

}  // namespace

StressReport stress_benchmark(const std::vector<int>& condition_exponents, std::size_t trials,
                              std::uint64_t seed, std::size_t jobs) {
  for (int e : condition_exponents) {
    if (e < 0 || e > 14) {
      throw ScenarioError("stress_benchmark: exponent " + std::to_string(e) +
                          " outside [0, 14]");
    }
  }
  if (jobs == 0) jobs = 1;

  StressReport report;
  report.seed = seed;
  report.trials_per_exponent = trials;
  if (trials == 0) return report;  // empty table

  for (int exponent : condition_exponents) {
    std::vector<TrialOutcome> outcomes(trials);
    auto worker = [&](std::size_t begin, std::size_t end) {
      for (std::size_t t = begin; t < end; ++t) {
        outcomes[t] = run_trial(seed + t, exponent);
      }
    };
    if (jobs == 1 || trials < 2) {
      worker(0, trials);
    } else {
      const std::size_t workers = std::min(jobs, trials);
      std::vector<std::thread> pool;
      const std::size_t chunk = (trials + workers - 1) / workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(trials, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(worker, begin, end);
      }
      for (auto& th : pool) th.join();
    }

    StressRow row;
    row.exponent = exponent;
    row.trials = trials;
    for (const TrialOutcome& o : outcomes) {
      if (o.degenerate) ++row.degenerate_trials;
      if (o.ud_anomaly) ++row.ud_anomalies;
      if (o.dense_anomaly) ++row.dense_anomalies;
    }
    report.rows.push_back(row);
  }
  return report;
}

void write_stress_report(const StressReport& report, std::ostream& os) {
  os << "schema: udkf-stress-v1\n";
  os << "seed: " << report.seed << "\n";
  os << "trials_per_exponent: " << report.trials_per_exponent << "\n";
  os << "exponent trials ud_anomalies dense_anomalies degenerate\n";
  for (const StressRow& row : report.rows) {
    os << row.exponent << " " << row.trials << " " << row.ud_anomalies << " "
       << row.dense_anomalies << " " << row.degenerate_trials << "\n";
  }
}

}  // namespace udkf
