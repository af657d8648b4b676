#include <doctest.h>

#include <cmath>

#include "udkf/sampling.hpp"
#include "udkf/wmgs.hpp"

using namespace udkf;

namespace {

double rel_err(const Matrix& got, const Matrix& want) {
  return frobenius_norm(got - want) / std::max(1e-300, frobenius_norm(want));
}

// Dense propagation oracle F P F^T + G Q G^T.
Matrix dense_propagation(const PropagationInputs& in) {
  Matrix p = in.f_jac * reconstruct(in.prior.u, in.prior.d) * transpose(in.f_jac);
  if (in.g_map) p = p + (*in.g_map) * (*in.q_cov) * transpose(*in.g_map);
  return p;
}

PropagationInputs random_inputs(PortableRng& rng, std::size_t n, std::size_t q) {
  PropagationInputs in;
  in.f_jac = random_matrix(rng, n, n, 0.4);
  for (std::size_t i = 0; i < n; ++i) in.f_jac(i, i) += 1.0;
  if (q > 0) {
    in.g_map = random_matrix(rng, n, q, 0.7);
    Matrix qc(q, q);
    for (std::size_t i = 0; i < q; ++i) qc(i, i) = rng.uniform() + 0.01;
    in.q_cov = qc;
  }
  in.prior = udu_decompose(random_spd(rng, n));
  return in;
}

}  // namespace

TEST_CASE("candidate assembly, scalar") {
  PropagationInputs in;
  in.f_jac = Matrix::identity(1);
  in.g_map = Matrix::from_rows({{1.0}});
  in.q_cov = Matrix::from_rows({{3.0}});
  DiagonalVector d(1);
  d[0] = 2.0;
  in.prior = UDFactors(UnitUpperTriangular(1), d);

  const WMGSWorkspace ws = build_candidate(in);
  REQUIRE(ws.nq == 2);
  CHECK(ws.w_rows[0][0] == 1.0);
  CHECK(ws.w_rows[0][1] == 1.0);
  CHECK(ws.d_hat[0] == 2.0);
  CHECK(ws.d_hat[1] == 3.0);
}

TEST_CASE("candidate assembly, no process noise") {
  PropagationInputs in;
  in.f_jac = Matrix::from_rows({{2.0, 1.0}, {0.0, 1.0}});
  in.prior = UDFactors::identity(2);

  const WMGSWorkspace ws = build_candidate(in);
  REQUIRE(ws.nq == 2);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(ws.w_rows[i][j] == in.f_jac(i, j));
  CHECK(ws.d_hat[0] == 1.0);
  CHECK(ws.d_hat[1] == 1.0);
}

TEST_CASE("candidate assembly, blockwise") {
  const double dt = 0.5;
  const double sq = 0.09;
  PropagationInputs in;
  in.f_jac = Matrix::from_rows({{1.0, dt}, {0.0, 1.0}});
  in.g_map = Matrix::from_rows({{0.0}, {1.0}});
  in.q_cov = Matrix::from_rows({{sq}});
  in.prior = UDFactors::identity(2);

  const WMGSWorkspace ws = build_candidate(in);
  REQUIRE(ws.nq == 3);
  // Left block F U+, right block G, entry by entry.
  const Matrix fu = in.f_jac * in.prior.u.to_matrix();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(ws.w_rows[i][j] == fu(i, j));
    CHECK(ws.w_rows[i][2] == (*in.g_map)(i, 0));
  }
  CHECK(ws.d_hat[2] == sq);
}

TEST_CASE("wmgs scalar recursions") {
  // n=1, q=0: D-bar = f^2 p.
  WMGSWorkspace ws;
  ws.n = 1;
  ws.nq = 1;
  ws.w_rows = {{3.0}};
  ws.d_hat = {2.0};
  ws.u_out = UnitUpperTriangular(1);
  const UDFactors out = wmgs(ws);
  CHECK(out.d[0] == doctest::Approx(18.0).epsilon(1e-15));

  // n=1, q=1: D-bar = f^2 p + q.
  WMGSWorkspace ws2;
  ws2.n = 1;
  ws2.nq = 2;
  ws2.w_rows = {{3.0, 1.0}};
  ws2.d_hat = {2.0, 5.0};
  ws2.u_out = UnitUpperTriangular(1);
  const UDFactors out2 = wmgs(ws2);
  CHECK(out2.d[0] == doctest::Approx(23.0).epsilon(1e-15));
}

TEST_CASE("propagate_factors trivial cases") {
  // Identity F, no noise: factors reconstruct to the same covariance.
  PortableRng rng(31);
  PropagationInputs in;
  in.f_jac = Matrix::identity(4);
  in.prior = udu_decompose(random_spd(rng, 4));
  const UDFactors out = propagate_factors(in);
  CHECK(rel_err(reconstruct(out.u, out.d), reconstruct(in.prior.u, in.prior.d)) <= 1e-12);

  // Scalar f=2, p=1, g=1, q=3: D-bar = 7.
  PropagationInputs sc;
  sc.f_jac = Matrix::from_rows({{2.0}});
  sc.g_map = Matrix::from_rows({{1.0}});
  sc.q_cov = Matrix::from_rows({{3.0}});
  DiagonalVector d(1);
  d[0] = 1.0;
  sc.prior = UDFactors(UnitUpperTriangular(1), d);
  const UDFactors out2 = propagate_factors(sc);
  CHECK(out2.d[0] == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("kinematic model, ten steps against the dense oracle") {
  const double dt = 0.1;
  PropagationInputs in;
  in.f_jac = Matrix::from_rows({{1, dt, 0.5 * dt * dt}, {0, 1, dt}, {0, 0, 1}});
  in.g_map = Matrix::from_rows({{0.0}, {0.0}, {1.0}});
  in.q_cov = Matrix::from_rows({{0.3}});
  in.prior = udu_decompose(Matrix::diagonal({1.0, 0.5, 0.25}));

  Matrix p_dense = reconstruct(in.prior.u, in.prior.d);
  for (int step = 0; step < 10; ++step) {
    const UDFactors out = propagate_factors(in);
    p_dense = in.f_jac * p_dense * transpose(in.f_jac) +
              (*in.g_map) * (*in.q_cov) * transpose(*in.g_map);
    CHECK(rel_err(reconstruct(out.u, out.d), p_dense) <= 1e-10);
    in.prior = out;
  }
}

TEST_CASE("seeded propagation oracle, W = UV, weighted orthogonality") {
  PortableRng rng(32);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 12) % 12;
    const std::size_t q = static_cast<std::size_t>(rng.uniform() * 7) % 7;
    PropagationInputs in = random_inputs(rng, n, q);

    WMGSWorkspace ws = build_candidate(in);
    const UDFactors out = wmgs(ws);

    CHECK(rel_err(reconstruct(out.u, out.d), dense_propagation(in)) <= 1e-10);

    // W = U-bar V, as matrices.
    double w_norm2 = 0.0, resid2 = 0.0;
    for (std::size_t i = 0; i < ws.n; ++i) {
      for (std::size_t l = 0; l < ws.nq; ++l) {
        double uv = 0.0;
        for (std::size_t k = i; k < ws.n; ++k) uv += out.u.at(i, k) * ws.v_rows[k][l];
        const double diff = ws.w_rows[i][l] - uv;
        resid2 += diff * diff;
        w_norm2 += ws.w_rows[i][l] * ws.w_rows[i][l];
      }
    }
    CHECK(std::sqrt(resid2) <= 1e-11 * std::sqrt(w_norm2));

    // v_k D-hat v_j^T ~ 0 for k != j.
    double max_dhat = 0.0;
    for (double v : ws.d_hat) max_dhat = std::max(max_dhat, v);
    for (std::size_t k = 0; k < ws.n; ++k) {
      for (std::size_t j = k + 1; j < ws.n; ++j) {
        double cross = 0.0;
        for (std::size_t l = 0; l < ws.nq; ++l)
          cross += ws.v_rows[k][l] * ws.d_hat[l] * ws.v_rows[j][l];
        const double bound =
            1e-13 * norm2(ws.v_rows[k]) * norm2(ws.v_rows[j]) * std::max(max_dhat, 1e-300);
        CHECK(std::fabs(cross) <= bound);
      }
    }

    // D-bar entries are nonnegative-weighted quadratic forms.
    for (std::size_t k = 0; k < ws.n; ++k) CHECK(out.d[k] >= -1e-12 * max_dhat);
  }
}

TEST_CASE("correlated process noise is folded through its own factors") {
  PortableRng rng(33);
  PropagationInputs in = random_inputs(rng, 4, 0);
  const Matrix a = random_matrix(rng, 3, 3, 0.5);
  Matrix q = a * transpose(a);
  for (std::size_t i = 0; i < 3; ++i) q(i, i) += 0.2;
  // Bitwise-symmetric copy.
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) q(j, i) = q(i, j);
  in.g_map = random_matrix(rng, 4, 3, 0.8);
  in.q_cov = q;

  const UDFactors out = propagate_factors(in);
  CHECK(rel_err(reconstruct(out.u, out.d), dense_propagation(in)) <= 1e-10);
}

TEST_CASE("rank-collapsed directions are zeroed, not fatal") {
  // Zero prior and zero noise: everything collapses.
  PropagationInputs in;
  in.f_jac = Matrix::from_rows({{1.0, 1.0}, {0.0, 1.0}});
  in.prior = UDFactors(UnitUpperTriangular(2), DiagonalVector(2));
  std::vector<std::size_t> events;
  const UDFactors out = propagate_factors(in, &events);
  CHECK(out.d[0] == 0.0);
  CHECK(out.d[1] == 0.0);
  CHECK(out.u.at(0, 1) == 0.0);
  // All projections were zero as well, so no degenerate event fires.
  CHECK(events.empty());
}

TEST_CASE("negative q diagonal is rejected") {
  PropagationInputs in;
  in.f_jac = Matrix::identity(2);
  in.g_map = Matrix::from_rows({{1.0}, {0.0}});
  in.q_cov = Matrix::from_rows({{-1.0}});
  in.prior = UDFactors::identity(2);
  CHECK_THROWS_AS(propagate_factors(in), NotPositiveDefiniteError);

  PropagationInputs bad;
  bad.f_jac = Matrix(2, 3);
  bad.prior = UDFactors::identity(2);
  CHECK_THROWS_AS(propagate_factors(bad), DimensionError);
}
