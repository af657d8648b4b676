#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace udkf {

struct StressRow {
  int exponent = 0;
  std::size_t trials = 0;
  std::size_t ud_anomalies = 0;      // trials with any negative D entry
  std::size_t dense_anomalies = 0;   // trials where naive dense P went indefinite
  std::size_t degenerate_trials = 0; // trials skipped (factorization refused the input)
};

struct StressReport {
  std::uint64_t seed = 0;
  std::size_t trials_per_exponent = 0;
  std::vector<StressRow> rows;
};

// Ill-conditioning benchmark: for each condition exponent e, build
// trial covariances with eigenvalue spread 10^-e, push strong scalar
// measurements through both the UD update and a naive (non-Joseph)
// dense update, and tabulate how often each side loses positive
// semi-definiteness. Trial t uses the derived seed (seed + t).
StressReport stress_benchmark(const std::vector<int>& condition_exponents, std::size_t trials,
                              std::uint64_t seed, std::size_t jobs = 1);

void write_stress_report(const StressReport& report, std::ostream& os);

}  // namespace udkf
