#include "udkf/wmgs.hpp"

#include <cmath>
#include <string>

namespace udkf {

namespace {

void check_inputs(const PropagationInputs& in) {
  const std::size_t n = in.prior.dim();
  if (in.f_jac.rows() != n || in.f_jac.cols() != n) {
    throw DimensionError("propagation: F is " + in.f_jac.shape_str() + " for state dim " +
                         std::to_string(n));
  }
  if (in.g_map.has_value() != in.q_cov.has_value()) {
    throw DimensionError("propagation: G and Q must be given together or both omitted");
  }
  if (in.g_map) {
    if (in.g_map->rows() != n) {
      throw DimensionError("propagation: G is " + in.g_map->shape_str() + " for state dim " +
                           std::to_string(n));
    }
    const std::size_t q = in.g_map->cols();
    if (in.q_cov->rows() != q || in.q_cov->cols() != q) {
      throw DimensionError("propagation: Q is " + in.q_cov->shape_str() + " for " +
                           std::to_string(q) + " noise channels");
    }
    for (std::size_t i = 0; i < q; ++i) {
      if ((*in.q_cov)(i, i) < 0.0) {
        throw NotPositiveDefiniteError("propagation: Q diagonal entry " + std::to_string(i) +
                                       " is negative");
      }
    }
  }
}

bool is_diagonal(const Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j && m(i, j) != 0.0) return false;
  return true;
}

}  // namespace

WMGSWorkspace build_candidate(const PropagationInputs& inputs) {
  check_inputs(inputs);
  const std::size_t n = inputs.n();
  std::size_t q = inputs.q();

  Matrix g = inputs.g_map.value_or(Matrix());
  std::vector<double> q_diag;
  if (q > 0) {
    const Matrix& q_cov = *inputs.q_cov;
    if (is_diagonal(q_cov)) {
      q_diag.resize(q);
      for (std::size_t i = 0; i < q; ++i) q_diag[i] = q_cov(i, i);
    } else {
      // Correlated process noise: Q = Uq Dq Uq^T, fold Uq into G.
      UDFactors qf = udu_decompose(q_cov);
      g = mat_mul(g, qf.u.to_matrix());
      q_diag = qf.d.entries();
    }
  }

  WMGSWorkspace ws;
  ws.n = n;
  ws.nq = n + q;
  ws.u_out = UnitUpperTriangular(n);
  ws.d_hat.resize(ws.nq);
  ws.w_rows.assign(n, std::vector<double>(ws.nq, 0.0));

  // Left block F U+ (U+ unit upper: column j of U+ has entries k <= j).
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k <= j; ++k) s += inputs.f_jac(i, k) * inputs.prior.u.at(k, j);
      ws.w_rows[i][j] = s;
    }
  }
  // Right block G.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < q; ++j) ws.w_rows[i][n + j] = g(i, j);

  for (std::size_t i = 0; i < n; ++i) ws.d_hat[i] = inputs.prior.d[i];
  for (std::size_t j = 0; j < q; ++j) ws.d_hat[n + j] = q_diag[j];

  return ws;
}

UDFactors wmgs(WMGSWorkspace& ws, std::optional<double> tol_orth) {
  const std::size_t n = ws.n;
  const std::size_t nq = ws.nq;
  for (std::size_t l = 0; l < nq; ++l) {
    if (ws.d_hat[l] < 0.0) {
      throw NotPositiveDefiniteError("wmgs: D-hat entry " + std::to_string(l) + " is negative");
    }
  }

  double tol = tol_orth.value_or(0.0);
  if (!tol_orth.has_value()) {
    double max_dhat = 0.0;
    for (double v : ws.d_hat) max_dhat = std::max(max_dhat, v);
    tol = 1e-13 * max_dhat;
  }

  ws.v_rows = ws.w_rows;  // deflated in place
  ws.degenerate_directions.clear();
  DiagonalVector d_out(n);
  UnitUpperTriangular u_out(n);

  for (std::size_t kk = n; kk-- > 0;) {
    const std::size_t k = kk;
    auto& vk = ws.v_rows[k];

    // Every term is w^2 * d with d >= 0, so the sum cannot go negative.
    double dk = 0.0;
    for (std::size_t l = 0; l < nq; ++l) dk += vk[l] * vk[l] * ws.d_hat[l];

    if (dk <= tol) {
      // Rank collapse along this direction. Zero the coefficients and
      // record the event only if some earlier row actually projects
      // onto it.
      d_out[k] = std::max(dk, 0.0);
      bool requested = false;
      for (std::size_t i = 0; i < k; ++i) {
        double c = 0.0;
        for (std::size_t l = 0; l < nq; ++l) c += ws.v_rows[i][l] * ws.d_hat[l] * vk[l];
        if (std::fabs(c) > tol) requested = true;
        u_out.set(i, k, 0.0);
      }
      if (requested) ws.degenerate_directions.push_back(k);
      continue;
    }

    d_out[k] = dk;
    const double inv_dk = 1.0 / dk;
    for (std::size_t i = 0; i < k; ++i) {
      auto& vi = ws.v_rows[i];
      double c = 0.0;
      for (std::size_t l = 0; l < nq; ++l) c += vi[l] * ws.d_hat[l] * vk[l];
      const double uik = c * inv_dk;
      u_out.set(i, k, uik);
      for (std::size_t l = 0; l < nq; ++l) vi[l] -= uik * vk[l];
    }
  }

  ws.u_out = u_out;
  return UDFactors(std::move(u_out), std::move(d_out));
}

UDFactors propagate_factors(const PropagationInputs& inputs, std::vector<std::size_t>* events) {
  WMGSWorkspace ws = build_candidate(inputs);
  UDFactors out = wmgs(ws);
  if (events != nullptr) {
    events->insert(events->end(), ws.degenerate_directions.begin(),
                   ws.degenerate_directions.end());
  }
  return out;
}

}  // namespace udkf
