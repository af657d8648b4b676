#include "udkf/selftest.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "udkf/dense_ekf.hpp"
#include "udkf/sampling.hpp"
#include "udkf/scenario.hpp"

namespace udkf {

namespace {

double rel_err(const Matrix& got, const Matrix& want) {
  return frobenius_norm(got - want) / std::max(1e-300, frobenius_norm(want));
}

double rel_err(const std::vector<double>& got, const std::vector<double>& want) {
  std::vector<double> diff(got.size());
  for (std::size_t i = 0; i < got.size(); ++i) diff[i] = got[i] - want[i];
  return norm2(diff) / std::max(1e-300, norm2(want));
}

std::size_t pick(PortableRng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform() * static_cast<double>(hi - lo + 1)) % (hi - lo + 1);
}

// Scalar covariance-form update: alpha, gain, posterior.
struct DenseScalarUpdate {
  double alpha;
  std::vector<double> gain;
  Matrix posterior;
};

DenseScalarUpdate dense_scalar_update(const Matrix& p, const std::vector<double>& h, double r) {
  const std::size_t n = p.rows();
  std::vector<double> ph(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ph[i] += p(i, j) * h[j];
  double alpha = r;
  for (std::size_t i = 0; i < n; ++i) alpha += h[i] * ph[i];
  DenseScalarUpdate out;
  out.alpha = alpha;
  out.gain.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.gain[i] = ph[i] / alpha;
  out.posterior = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.posterior(i, j) = p(i, j) - ph[i] * ph[j] / alpha;
  return out;
}

ProcessModel make_process(const RandomLinearSystem& sys) {
  ProcessModel p;
  const Matrix f = sys.f;
  p.propagate_state = [f](const std::vector<double>& x, const std::vector<double>&) {
    return mat_vec(f, x);
  };
  p.jacobian_f = [f](const std::vector<double>&, const std::vector<double>&) { return f; };
  if (sys.nq > 0) {
    const Matrix g = sys.g;
    p.jacobian_g = [g](const std::vector<double>&, const std::vector<double>&) { return g; };
    p.q_cov = sys.q;
  }
  return p;
}

MeasurementModelSet make_measurement(const RandomLinearSystem& sys) {
  MeasurementModelSet m;
  const Matrix h = sys.h;
  m.predict = [h](const std::vector<double>& x) { return mat_vec(h, x); };
  m.jacobian_h = [h](const std::vector<double>&) { return h; };
  m.r_cov = sys.r;
  return m;
}

bool check_udu_round_trip(double& worst) {
  PortableRng rng(101);
  worst = 0.0;
  for (std::size_t n = 1; n <= 20; ++n) {
    for (int rep = 0; rep < 2; ++rep) {
      const Matrix p = random_spd(rng, n);
      const UDFactors f = udu_decompose(p);
      worst = std::max(worst, rel_err(reconstruct(f.u, f.d), p));
    }
  }
  return worst <= 1e-11;
}

bool check_wmgs(double& worst) {
  PortableRng rng(202);
  worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = pick(rng, 1, 8);
    const std::size_t q = pick(rng, 0, 4);
    const RandomLinearSystem sys = random_linear_system(rng, n, q, 1);
    PropagationInputs in;
    in.f_jac = sys.f;
    if (q > 0) {
      in.g_map = sys.g;
      in.q_cov = sys.q;
    }
    in.prior = udu_decompose(sys.p0);
    const UDFactors out = propagate_factors(in);

    Matrix want = sys.f * reconstruct(in.prior.u, in.prior.d) * transpose(sys.f);
    if (q > 0) want = want + sys.g * sys.q * transpose(sys.g);
    worst = std::max(worst, rel_err(reconstruct(out.u, out.d), want));
  }
  return worst <= 1e-10;
}

bool check_modified_agee_turner(double& worst) {
  PortableRng rng(303);
  worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = pick(rng, 1, 10);
    const UDFactors prior = udu_decompose(random_spd(rng, n));
    const Matrix p = reconstruct(prior.u, prior.d);
    ScalarMeasurement meas;
    meas.h_row = random_unit_row(rng, n);
    for (double& v : meas.h_row) v *= 2.0 * rng.uniform();
    meas.r_scalar = 0.1 + rng.uniform();
    meas.value = rng.normal();
    meas.predicted = 0.0;

    const ScalarUpdateResult got = modified_agee_turner(prior, meas);
    const DenseScalarUpdate want = dense_scalar_update(p, meas.h_row, meas.r_scalar);
    worst = std::max(worst, rel_err(got.gain, want.gain));
    worst = std::max(worst, rel_err(reconstruct(got.factors.u, got.factors.d), want.posterior));
    // alpha_n must equal H P H^T + r to tighter precision than the
    // posterior comparison.
    if (std::fabs(got.innovation_variance - want.alpha) > 1e-12 * want.alpha) return false;
  }
  return worst <= 1e-10;
}

bool check_direct_vs_agee_turner(double& worst) {
  PortableRng rng(404);
  worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = pick(rng, 1, 10);
    const UDFactors prior = udu_decompose(random_spd(rng, n));
    ScalarMeasurement meas;
    meas.h_row = random_unit_row(rng, n);
    meas.r_scalar = 0.05 + rng.uniform();
    const ScalarUpdateResult a = modified_agee_turner(prior, meas);
    const ScalarUpdateResult b = direct_ud_update(prior, meas);
    worst = std::max(worst, rel_err(reconstruct(a.factors.u, a.factors.d),
                                    reconstruct(b.factors.u, b.factors.d)));
  }
  return worst <= 1e-9;
}

bool check_standard_agee_turner(double& worst) {
  PortableRng rng(505);
  worst = 0.0;
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = pick(rng, 1, 8);
    const UDFactors in = udu_decompose(random_spd(rng, n));
    RankOneInputs r1;
    r1.factors = in;
    r1.c = 2.0 * rng.uniform();
    r1.a = rng.normal_vector(n);
    const UDFactors out = standard_agee_turner(r1);

    Matrix want = reconstruct(in.u, in.d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) want(i, j) += r1.c * r1.a[i] * r1.a[j];
    worst = std::max(worst, rel_err(reconstruct(out.u, out.d), want));
  }
  return worst <= 1e-10;
}

bool check_decorrelated_update(double& worst) {
  PortableRng rng(606);
  worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = pick(rng, 2, 6);
    const std::size_t m = pick(rng, 2, 4);
    const RandomLinearSystem sys = random_linear_system(rng, n, 0, m, /*correlated_r=*/true);
    const MeasurementModelSet models = make_measurement(sys);

    StateEstimate est;
    est.x_hat = sys.x0;
    est.factors = udu_decompose(sys.p0);
    DenseEstimate dense_est{sys.x0, reconstruct(est.factors.u, est.factors.d), 0};

    std::vector<double> y = rng.normal_vector(m);
    const MeasurementUpdateResult got = measurement_update(est, models, y);
    const DenseEstimate want = dense_measurement_update(dense_est, models, y);

    worst = std::max(worst, rel_err(got.estimate.x_hat, want.x_hat));
    worst = std::max(
        worst, rel_err(reconstruct(got.estimate.factors.u, got.estimate.factors.d), want.p));
  }
  return worst <= 1e-9;
}

bool check_filter_vs_dense(double& worst) {
  worst = 0.0;
  for (std::uint64_t scenario = 0; scenario < 3; ++scenario) {
    PortableRng rng(700 + scenario);
    const std::size_t n = pick(rng, 2, 6);
    const std::size_t q = pick(rng, 1, 3);
    const std::size_t m = pick(rng, 1, 3);
    const RandomLinearSystem sys = random_linear_system(rng, n, q, m);
    const ProcessModel process = make_process(sys);
    const MeasurementModelSet models = make_measurement(sys);

    std::vector<EpochInput> inputs(50);
    for (auto& in : inputs) in.y = rng.normal_vector(m);

    const FilterRun ud = run_filter(initialize(sys.x0, sys.p0), process, models, inputs);
    const DenseRun dense =
        dense_run_filter(dense_initialize(sys.x0, sys.p0), process, models, inputs);
    if (ud.error || dense.error || !ud.diagnostics.negative_d_events.empty()) return false;

    for (std::size_t k = 0; k < ud.trajectory.size(); ++k) {
      const auto& a = ud.trajectory[k];
      const auto& b = dense.trajectory[k];
      std::vector<double> dx(a.x_hat.size());
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = a.x_hat[i] - b.x_hat[i];
      worst = std::max(worst, norm2(dx) / std::max(1.0, norm2(b.x_hat)));
      worst = std::max(worst, rel_err(reconstruct(a.factors.u, a.factors.d), b.p));
    }
  }
  return worst <= 1e-9;
}

bool check_run_determinism(double& worst) {
  worst = 0.0;
  ScenarioConfig cfg;
  cfg.model = "constant-velocity";
  cfg.n = 2;
  cfg.q = 1;
  cfg.m = 1;
  cfg.steps = 10;
  cfg.seed = 42;
  cfg.mode = FilterMode::kBoth;

  auto render = [](const RunReport& r) {
    std::ostringstream os;
    write_trajectory_csv(r, os);
    write_divergence_csv(r, os);
    write_summary(r, os);
    return os.str();
  };
  const RunReport first = run_scenario(cfg);
  const RunReport second = run_scenario(cfg);
  if (first.records.size() != cfg.steps + 1) return false;
  worst = first.max_cov_divergence;
  return render(first) == render(second) && first.max_cov_divergence <= 1e-9;
}

}  // namespace

bool run_selftest(std::ostream& os) {
  struct Entry {
    const char* name;
    bool (*fn)(double&);
  };
  const Entry entries[] = {
      {"udu-round-trip", check_udu_round_trip},
      {"wmgs-propagation-oracle", check_wmgs},
      {"modified-agee-turner-oracle", check_modified_agee_turner},
      {"direct-update-cross-check", check_direct_vs_agee_turner},
      {"standard-agee-turner-oracle", check_standard_agee_turner},
      {"decorrelated-vs-batch", check_decorrelated_update},
      {"filter-vs-dense-oracle", check_filter_vs_dense},
      {"run-determinism", check_run_determinism},
  };
  bool all_ok = true;
  for (const Entry& e : entries) {
    double worst = 0.0;
    bool ok = false;
    std::string detail;
    try {
      ok = e.fn(worst);
    } catch (const std::exception& ex) {
      detail = ex.what();
    }
    all_ok = all_ok && ok;
    os << (ok ? "ok   " : "FAIL ") << e.name << " (worst " << worst << ")";
    if (!detail.empty()) os << " [" << detail << "]";
    os << "\n";
  }
  os << (all_ok ? "selftest passed" : "selftest FAILED") << "\n";
  return all_ok;
}

}  // namespace udkf
