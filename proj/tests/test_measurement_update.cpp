#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "udkf/measurement_update.hpp"
#include "udkf/sampling.hpp"

using namespace udkf;

namespace {

double rel_err(const Matrix& got, const Matrix& want) {
  return frobenius_norm(got - want) / std::max(1e-300, frobenius_norm(want));
}

struct DenseScalar {
  double alpha;
  std::vector<double> gain;
  Matrix posterior;
};

// Covariance-form oracle for one scalar measurement.
DenseScalar dense_scalar_update(const Matrix& p, const std::vector<double>& h, double r) {
  const std::size_t n = p.rows();
  std::vector<double> ph(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ph[i] += p(i, j) * h[j];
  double alpha = r;
  for (std::size_t i = 0; i < n; ++i) alpha += h[i] * ph[i];
  DenseScalar out{alpha, std::vector<double>(n), Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) out.gain[i] = ph[i] / alpha;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.posterior(i, j) = p(i, j) - ph[i] * ph[j] / alpha;
  return out;
}

}  // namespace

TEST_CASE("modified Agee-Turner, zero H row carries no information") {
  PortableRng rng(41);
  const UDFactors prior = udu_decompose(random_spd(rng, 4));
  ScalarMeasurement meas;
  meas.h_row = std::vector<double>(4, 0.0);
  meas.r_scalar = 0.7;
  meas.value = 1.0;
  meas.predicted = 0.25;

  const ScalarUpdateResult res = modified_agee_turner(prior, meas);
  CHECK(res.innovation_variance == 0.7);
  CHECK(res.innovation == doctest::Approx(0.75).epsilon(1e-15));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(res.gain[i] == 0.0);
    CHECK(res.factors.d[i] == prior.d[i]);
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(res.factors.u.at(i, j) == prior.u.at(i, j));
  }
}

TEST_CASE("modified Agee-Turner, scalar closed form") {
  const double d = 2.0, h = 3.0, r = 0.5;
  DiagonalVector dv(1);
  dv[0] = d;
  const UDFactors prior(UnitUpperTriangular(1), dv);
  ScalarMeasurement meas;
  meas.h_row = {h};
  meas.r_scalar = r;

  const ScalarUpdateResult res = modified_agee_turner(prior, meas);
  const double alpha = r + d * h * h;
  CHECK(res.innovation_variance == doctest::Approx(alpha).epsilon(1e-15));
  CHECK(res.gain[0] == doctest::Approx(d * h / alpha).epsilon(1e-15));
  CHECK(res.factors.d[0] == doctest::Approx(r * d / alpha).epsilon(1e-15));
}

TEST_CASE("modified Agee-Turner matches the dense oracle") {
  PortableRng rng(42);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 10) % 10;
    const UDFactors prior = udu_decompose(random_spd(rng, n));
    const Matrix p = reconstruct(prior.u, prior.d);
    ScalarMeasurement meas;
    meas.h_row = rng.normal_vector(n);
    meas.r_scalar = 0.5;

    const ScalarUpdateResult got = modified_agee_turner(prior, meas);
    const DenseScalar want = dense_scalar_update(p, meas.h_row, meas.r_scalar);

    CHECK(std::fabs(got.innovation_variance - want.alpha) <= 1e-12 * want.alpha);
    double gain_err = 0.0, gain_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gain_err += (got.gain[i] - want.gain[i]) * (got.gain[i] - want.gain[i]);
      gain_norm += want.gain[i] * want.gain[i];
    }
    CHECK(std::sqrt(gain_err) <= 1e-10 * std::max(1e-300, std::sqrt(gain_norm)));
    CHECK(rel_err(reconstruct(got.factors.u, got.factors.d), want.posterior) <= 1e-10);

    // PSD preservation, and the innovation variance never drops below
    // the measurement noise while the prior is PSD.
    double scale = std::max(1.0, prior.d.max_entry());
    for (std::size_t i = 0; i < n; ++i) CHECK(got.factors.d[i] >= -1e-14 * scale);
    CHECK(got.innovation_variance >= meas.r_scalar);
  }
}

TEST_CASE("order invariance of a batch of uncorrelated scalars") {
  PortableRng rng(43);
  const std::size_t n = 5, m = 4;
  const UDFactors prior = udu_decompose(random_spd(rng, n));
  std::vector<ScalarMeasurement> batch(m);
  for (auto& meas : batch) {
    meas.h_row = rng.normal_vector(n);
    meas.r_scalar = 0.2 + rng.uniform();
  }

  auto process = [&](const std::vector<std::size_t>& order) {
    UDFactors f = prior;
    for (std::size_t idx : order) f = modified_agee_turner(f, batch[idx]).factors;
    return reconstruct(f.u, f.d);
  };

  const Matrix forward = process({0, 1, 2, 3});
  const Matrix reversed = process({3, 2, 1, 0});
  const Matrix shuffled = process({2, 0, 3, 1});
  CHECK(rel_err(reversed, forward) <= 1e-9);
  CHECK(rel_err(shuffled, forward) <= 1e-9);
}

TEST_CASE("perfect measurement (r = 0) collapses without failing") {
  PortableRng rng(44);
  const UDFactors prior = udu_decompose(random_spd(rng, 3));
  const Matrix p = reconstruct(prior.u, prior.d);
  ScalarMeasurement meas;
  meas.h_row = {1.0, 0.0, 0.0};
  meas.r_scalar = 0.0;

  const ScalarUpdateResult res = modified_agee_turner(prior, meas);
  const DenseScalar want = dense_scalar_update(p, meas.h_row, meas.r_scalar);
  CHECK(rel_err(reconstruct(res.factors.u, res.factors.d), want.posterior) <= 1e-9);
  // Posterior variance along the measured direction is zero.
  const Matrix post = reconstruct(res.factors.u, res.factors.d);
  CHECK(std::fabs(post(0, 0)) <= 1e-12 * p(0, 0));

  // The reference path survives the singular bracket the same way.
  const ScalarUpdateResult dres = direct_ud_update(prior, meas);
  CHECK(rel_err(reconstruct(dres.factors.u, dres.factors.d), want.posterior) <= 1e-9);
}

TEST_CASE("updates continue on an exactly singular prior") {
  // A perfect measurement collapses one direction; the next update must
  // accept the resulting semi-definite factors.
  UDFactors f = UDFactors::identity(2);
  ScalarMeasurement first;
  first.h_row = {1.0, 0.0};
  first.r_scalar = 0.0;
  f = modified_agee_turner(f, first).factors;
  CHECK(f.d[0] == 0.0);
  CHECK(f.d[1] == 1.0);

  ScalarMeasurement second;
  second.h_row = {0.0, 1.0};
  second.r_scalar = 0.5;
  const ScalarUpdateResult res = modified_agee_turner(f, second);
  CHECK(res.innovation_variance == doctest::Approx(1.5).epsilon(1e-15));
  const Matrix post = reconstruct(res.factors.u, res.factors.d);
  CHECK(post(0, 0) == 0.0);
  CHECK(post(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(post(0, 1) == 0.0);
}

TEST_CASE("scalar update error paths") {
  DiagonalVector d(2);
  d[0] = 1.0;
  d[1] = -0.5;
  const UDFactors bad(UnitUpperTriangular(2), d);
  ScalarMeasurement meas;
  meas.h_row = {1.0, 0.0};
  meas.r_scalar = 1.0;
  CHECK_THROWS_AS(modified_agee_turner(bad, meas), NegativePriorDError);
  CHECK_THROWS_AS(direct_ud_update(bad, meas), NegativePriorDError);

  const UDFactors prior = UDFactors::identity(2);
  ScalarMeasurement degenerate;
  degenerate.h_row = {0.0, 0.0};
  degenerate.r_scalar = 0.0;
  CHECK_THROWS_AS(modified_agee_turner(prior, degenerate), ZeroInnovationVarianceError);
  CHECK_THROWS_AS(direct_ud_update(prior, degenerate), ZeroInnovationVarianceError);

  ScalarMeasurement negative_r;
  negative_r.h_row = {1.0, 0.0};
  negative_r.r_scalar = -1.0;
  CHECK_THROWS_AS(modified_agee_turner(prior, negative_r), NotPositiveDefiniteError);

  ScalarMeasurement wrong_len;
  wrong_len.h_row = {1.0};
  wrong_len.r_scalar = 1.0;
  CHECK_THROWS_AS(modified_agee_turner(prior, wrong_len), DimensionError);
}

TEST_CASE("direct UD update mirrors the trivial cases and the oracle") {
  // H = 0.
  PortableRng rng(45);
  const UDFactors prior = udu_decompose(random_spd(rng, 3));
  ScalarMeasurement zero;
  zero.h_row = {0.0, 0.0, 0.0};
  zero.r_scalar = 0.4;
  const ScalarUpdateResult res = direct_ud_update(prior, zero);
  CHECK(res.innovation_variance == doctest::Approx(0.4).epsilon(1e-15));
  for (std::size_t i = 0; i < 3; ++i) CHECK(res.gain[i] == 0.0);
  CHECK(rel_err(reconstruct(res.factors.u, res.factors.d),
                reconstruct(prior.u, prior.d)) <= 1e-12);

  // Scalar closed form.
  DiagonalVector dv(1);
  dv[0] = 2.0;
  const UDFactors sc(UnitUpperTriangular(1), dv);
  ScalarMeasurement meas;
  meas.h_row = {3.0};
  meas.r_scalar = 0.5;
  const ScalarUpdateResult sres = direct_ud_update(sc, meas);
  const double alpha = 0.5 + 2.0 * 9.0;
  CHECK(sres.gain[0] == doctest::Approx(2.0 * 3.0 / alpha).epsilon(1e-14));
  CHECK(sres.factors.d[0] == doctest::Approx(0.5 * 2.0 / alpha).epsilon(1e-12));

  // Cross-validation against the Agee-Turner path.
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 10) % 10;
    const UDFactors f = udu_decompose(random_spd(rng, n));
    ScalarMeasurement s;
    s.h_row = rng.normal_vector(n);
    s.r_scalar = 0.05 + rng.uniform();
    const ScalarUpdateResult a = modified_agee_turner(f, s);
    const ScalarUpdateResult b = direct_ud_update(f, s);
    CHECK(rel_err(reconstruct(b.factors.u, b.factors.d),
                  reconstruct(a.factors.u, a.factors.d)) <= 1e-9);
  }
}

TEST_CASE("standard Agee-Turner no-op and scalar boundary") {
  PortableRng rng(46);
  const UDFactors in = udu_decompose(random_spd(rng, 4));
  RankOneInputs r1;
  r1.factors = in;
  r1.c = 0.0;
  r1.a = rng.normal_vector(4);
  const UDFactors out = standard_agee_turner(r1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out.d[i] == in.d[i]);  // bit-exact
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(out.u.at(i, j) == in.u.at(i, j));
  }

  DiagonalVector dv(1);
  dv[0] = 1.5;
  RankOneInputs s;
  s.factors = UDFactors(UnitUpperTriangular(1), dv);
  s.c = 2.0;
  s.a = {3.0};
  CHECK(standard_agee_turner(s).d[0] == doctest::Approx(1.5 + 2.0 * 9.0).epsilon(1e-15));
}

TEST_CASE("standard Agee-Turner reconstruction oracle") {
  // Fixed 3x3 case from seeded factors.
  PortableRng rng(47);
  const UDFactors in = udu_decompose(random_spd(rng, 3));
  RankOneInputs r1;
  r1.factors = in;
  r1.c = 2.0;
  r1.a = {1.0, -1.0, 0.5};
  const UDFactors out = standard_agee_turner(r1);
  Matrix want = reconstruct(in.u, in.d);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) want(i, j) += 2.0 * r1.a[i] * r1.a[j];
  CHECK(max_abs(reconstruct(out.u, out.d) - want) <= 1e-11 * std::max(1.0, max_abs(want)));

  // Factored route agrees with decompose-of-dense route.
  const UDFactors via_dense = udu_decompose(want);
  CHECK(rel_err(reconstruct(out.u, out.d), reconstruct(via_dense.u, via_dense.d)) <= 1e-10);

  // Seeded sweep.
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 8) % 8;
    RankOneInputs inputs;
    inputs.factors = udu_decompose(random_spd(rng, n));
    inputs.c = 2.0 * rng.uniform();
    inputs.a = rng.normal_vector(n);
    const UDFactors got = standard_agee_turner(inputs);
    Matrix expect = reconstruct(inputs.factors.u, inputs.factors.d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) expect(i, j) += inputs.c * inputs.a[i] * inputs.a[j];
    CHECK(rel_err(reconstruct(got.u, got.d), expect) <= 1e-10);
  }
}

TEST_CASE("standard Agee-Turner zero pivot error") {
  DiagonalVector d(2);
  d[0] = 1.0;
  d[1] = 1e-6;
  RankOneInputs r1;
  r1.factors = UDFactors(UnitUpperTriangular(2), d);
  r1.c = 1e-7;
  r1.a = {1.0, 1.0};
  // With an absurdly large pivot tolerance the required division is
  // refused.
  CHECK_THROWS_AS(standard_agee_turner(r1, /*pivot_tol=*/1.0), ZeroPivotError);
  CHECK_NOTHROW(standard_agee_turner(r1));
}

TEST_CASE("decorrelation transform examples") {
  // Diagonal R is already decorrelated.
  const DecorrelationTransform t0 = build_decorrelation(Matrix::diagonal({2.0, 3.0}));
  CHECK(t0.u_r.at(0, 1) == 0.0);
  CHECK(t0.d_r[0] == 2.0);
  CHECK(t0.d_r[1] == 3.0);

  // Same 2x2 hand factorization as the UD module.
  const DecorrelationTransform t1 = build_decorrelation(Matrix::from_rows({{2, 1}, {1, 1}}));
  CHECK(t1.u_r.at(0, 1) == 1.0);
  CHECK(t1.d_r[0] == 1.0);
  CHECK(t1.d_r[1] == 1.0);

  // R = I + 0.1 * ones, 4x4.
  Matrix r(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) r(i, j) = (i == j ? 1.0 : 0.0) + 0.1;
  const DecorrelationTransform t2 = build_decorrelation(r);
  CHECK(rel_err(reconstruct(t2.u_r, t2.d_r), r) <= 1e-12);

  // Singular R is rejected.
  CHECK_THROWS_AS(build_decorrelation(Matrix::from_rows({{1, 1}, {1, 1}})),
                  NotPositiveDefiniteError);
}

TEST_CASE("decorrelate by back-substitution") {
  // Identity transform.
  const DecorrelationTransform id{UnitUpperTriangular(2), DiagonalVector({1.0, 1.0})};
  const Matrix h = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  const DecorrelatedMeasurements dm0 = decorrelate(id, {3.0, 1.0}, h);
  CHECK(dm0.z[0] == 3.0);
  CHECK(dm0.z[1] == 1.0);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(dm0.h_z(i, j) == h(i, j));

  // Hand back-substitution: z2 = 1, z1 = 3 - 1*1 = 2.
  UnitUpperTriangular u(2);
  u.set(0, 1, 1.0);
  const DecorrelationTransform t{u, DiagonalVector({1.0, 1.0})};
  const DecorrelatedMeasurements dm = decorrelate(t, {3.0, 1.0}, h);
  CHECK(dm.z[0] == 2.0);
  CHECK(dm.z[1] == 1.0);

  // solve round trip: U (U^{-1} y) = y.
  const std::vector<double> y{0.5, -2.0};
  const std::vector<double> x = solve_unit_upper(u, y);
  const std::vector<double> back = u.times(x);
  CHECK(back[0] == doctest::Approx(y[0]).epsilon(1e-15));
  CHECK(back[1] == doctest::Approx(y[1]).epsilon(1e-15));
}

TEST_CASE("transformed residual covariance, Monte Carlo cross-check") {
  PortableRng rng(48);
  const std::size_t m = 3, n = 3;
  const Matrix p = random_spd(rng, n);
  const Matrix h = random_matrix(rng, m, n);
  const Matrix a = random_matrix(rng, m, m, 0.4);
  Matrix r_c = a * transpose(a);
  for (std::size_t i = 0; i < m; ++i) r_c(i, i) += 0.3;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) r_c(j, i) = r_c(i, j);

  const DecorrelationTransform t = build_decorrelation(r_c);
  const DecorrelatedMeasurements dm = decorrelate(t, std::vector<double>(m, 0.0), h);

  // Expected covariance H_z P H_z^T + D_r.
  Matrix want = dm.h_z * p * transpose(dm.h_z);
  for (std::size_t i = 0; i < m; ++i) want(i, i) += dm.d_r[i];

  // Sample e = U_r^{-1} (H dx + v), dx ~ N(0, P), v ~ N(0, R_c).
  const UDFactors pf = udu_decompose(p);
  auto sample = [&rng](const UDFactors& f) {
    std::vector<double> xi = rng.normal_vector(f.dim());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] *= std::sqrt(std::max(f.d[i], 0.0));
    return f.u.times(xi);
  };
  const UDFactors rf = udu_decompose(r_c);

  Matrix emp(m, m);
  const int samples = 100000;
  for (int s = 0; s < samples; ++s) {
    const std::vector<double> dx = sample(pf);
    const std::vector<double> v = sample(rf);
    std::vector<double> res = mat_vec(h, dx);
    for (std::size_t i = 0; i < m; ++i) res[i] += v[i];
    res = solve_unit_upper(t.u_r, res);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) emp(i, j) += res[i] * res[j];
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) emp(i, j) /= samples;

  CHECK(rel_err(emp, want) <= 0.02);
}
