#pragma once

#include <optional>
#include <vector>

#include "udkf/ud_factorization.hpp"

namespace udkf {

// Time-update inputs. g_map/q_cov are absent when there is no process
// noise (q = 0).
struct PropagationInputs {
  Matrix f_jac;                   // n x n
  std::optional<Matrix> g_map;    // n x q
  std::optional<Matrix> q_cov;    // q x q, diagonal entries >= 0
  UDFactors prior;                // U+, D+ from the last update

  std::size_t n() const { return prior.dim(); }
  std::size_t q() const { return g_map ? g_map->cols() : 0; }
};

// Candidate form for the propagated covariance plus the byproducts of
// the orthogonalization: W = [F U+ | G], D-hat = diag(D+, Q). After
// wmgs() runs, v_rows holds the weighted-orthogonal rows with
// v_k D-hat v_j^T ~ 0 for k != j, and u_out the recombination
// coefficients with W = U V.
struct WMGSWorkspace {
  std::size_t n = 0;
  std::size_t nq = 0;                         // n + q
  std::vector<std::vector<double>> w_rows;    // original rows of W
  std::vector<double> d_hat;                  // length n + q
  std::vector<std::vector<double>> v_rows;    // filled by wmgs()
  UnitUpperTriangular u_out;                  // filled by wmgs()
  std::vector<std::size_t> degenerate_directions;  // filled by wmgs()
};

// Assembles W and D-hat. A non-diagonal Q is folded into G first
// (Q = Uq Dq Uq^T, G <- G Uq, Q <- Dq), keeping the orthogonalization
// core itself on a diagonal weight.
WMGSWorkspace build_candidate(const PropagationInputs& inputs);

// Weighted Modified Gram-Schmidt sweep over the rows of W under the
// weight D-hat. Rows are processed last to first; when row k is
// reached it has been deflated against every finalized v_j (j > k), so
// it is v_k, and
//   D-bar(k) = v_k D-hat v_k^T
//   u(i,k)   = w_i D-hat v_k^T / D-bar(k)   for i < k.
// Returns U-bar = U and D-bar.
//
// A direction with D-bar(j) <= tol_orth is rank-collapsed: its
// coefficients are zeroed, its diagonal clamped at >= 0, and the index
// recorded in workspace.degenerate_directions when a nonzero
// projection onto it was actually requested.
UDFactors wmgs(WMGSWorkspace& workspace, std::optional<double> tol_orth = std::nullopt);

// build_candidate followed by wmgs. Degenerate-direction indices are
// appended to *events when given.
UDFactors propagate_factors(const PropagationInputs& inputs,
                            std::vector<std::size_t>* events = nullptr);

}  // namespace udkf
