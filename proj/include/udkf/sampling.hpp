#pragma once

#include <cmath>

#include "udkf/matrix.hpp"
#include "udkf/rng.hpp"

namespace udkf {

// Seeded random problem generators shared by the stress benchmark, the
// self-test suite, and the verification harness.

inline Matrix random_matrix(PortableRng& rng, std::size_t rows, std::size_t cols,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

// A A^T + I: comfortably positive definite at every size.
inline Matrix random_spd(PortableRng& rng, std::size_t n, double scale = 1.0) {
  const Matrix a = random_matrix(rng, n, n, scale);
  Matrix p = a * transpose(a);
  for (std::size_t i = 0; i < n; ++i) p(i, i) += 1.0;
  return p;
}

// Gram-Schmidt over random normal columns.
inline Matrix random_orthogonal(PortableRng& rng, std::size_t n) {
  Matrix q = random_matrix(rng, n, n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double proj = 0.0;
      for (std::size_t i = 0; i < n; ++i) proj += q(i, c) * q(i, prev);
      for (std::size_t i = 0; i < n; ++i) q(i, c) -= proj * q(i, prev);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, c) * q(i, c);
    norm = std::sqrt(norm);
    // Random normal columns are never meaningfully collinear at these
    // sizes; renormalize and move on.
    for (std::size_t i = 0; i < n; ++i) q(i, c) /= norm;
  }
  return q;
}

inline std::vector<double> random_unit_row(PortableRng& rng, std::size_t n) {
  std::vector<double> h(n);
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    h[i] = rng.normal();
    norm += h[i] * h[i];
  }
  norm = std::sqrt(norm);
  for (double& v : h) v /= norm;
  return h;
}

// A well-behaved random linear system: contraction-leaning dynamics,
// diagonal Q, diagonal R unless asked otherwise.
struct RandomLinearSystem {
  Matrix f, h, r, p0;
  Matrix g{1, 1}, q{1, 1};
  std::size_t nq = 0;
  std::vector<double> x0;
};

inline RandomLinearSystem random_linear_system(PortableRng& rng, std::size_t n, std::size_t q,
                                               std::size_t m, bool correlated_r = false) {
  RandomLinearSystem sys;
  sys.nq = q;
  sys.f = random_matrix(rng, n, n, 0.1);
  for (std::size_t i = 0; i < n; ++i) sys.f(i, i) += 0.95;
  if (q > 0) {
    sys.g = random_matrix(rng, n, q, 0.5);
    Matrix qc(q, q);
    for (std::size_t i = 0; i < q; ++i) qc(i, i) = 0.05 + rng.uniform();
    sys.q = qc;
  }
  sys.h = random_matrix(rng, m, n, 1.0);
  if (correlated_r) {
    const Matrix a = random_matrix(rng, m, m, 0.3);
    sys.r = a * transpose(a);
    for (std::size_t i = 0; i < m; ++i) sys.r(i, i) += 0.5;
  } else {
    Matrix r(m, m);
    for (std::size_t i = 0; i < m; ++i) r(i, i) = 0.1 + rng.uniform();
    sys.r = r;
  }
  sys.p0 = random_spd(rng, n, 0.5);
  sys.x0.resize(n);
  for (double& v : sys.x0) v = rng.normal();
  return sys;
}

}  // namespace udkf
