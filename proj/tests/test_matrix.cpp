#include <doctest.h>

#include <cmath>

#include "udkf/matrix.hpp"
#include "udkf/sampling.hpp"

using namespace udkf;

namespace {

// Independent product oracle: plain triple loop, no shortcuts.
Matrix brute_force_mul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

bool entries_equal(const Matrix& a, const Matrix& b, double tol = 0.0) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (std::fabs(a(i, j) - b(i, j)) > tol) return false;
  return true;
}

}  // namespace

TEST_CASE("mat_mul identity cases") {
  const Matrix i2 = Matrix::identity(2);
  CHECK(entries_equal(mat_mul(i2, i2), i2));

  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  CHECK(entries_equal(mat_mul(a, i2), a));
}

TEST_CASE("mat_mul hand product matches brute force") {
  const Matrix a = Matrix::from_rows({{1, 1}, {0, 1}});
  const Matrix b = Matrix::from_rows({{1, 0}, {1, 1}});
  const Matrix expected = Matrix::from_rows({{2, 1}, {1, 1}});
  CHECK(entries_equal(mat_mul(a, b), expected));
  CHECK(entries_equal(mat_mul(a, b), brute_force_mul(a, b)));
}

TEST_CASE("mat_mul dimension mismatch names both shapes") {
  const Matrix a(2, 3);
  const Matrix b(2, 2);
  try {
    mat_mul(a, b);
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("2x2") != std::string::npos);
  }
}

TEST_CASE("mat_mul associativity property") {
  PortableRng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n1 = 1 + static_cast<std::size_t>(rng.uniform() * 6);
    const std::size_t n2 = 1 + static_cast<std::size_t>(rng.uniform() * 6);
    const std::size_t n3 = 1 + static_cast<std::size_t>(rng.uniform() * 6);
    const std::size_t n4 = 1 + static_cast<std::size_t>(rng.uniform() * 6);
    const Matrix a = random_matrix(rng, n1, n2, 1e3 * rng.uniform());
    const Matrix b = random_matrix(rng, n2, n3, 1e3 * rng.uniform());
    const Matrix c = random_matrix(rng, n3, n4, 1e3 * rng.uniform());
    const Matrix left = mat_mul(mat_mul(a, b), c);
    const Matrix right = mat_mul(a, mat_mul(b, c));
    CHECK(frobenius_norm(left - right) <= 1e-12 * std::max(1.0, frobenius_norm(left)));
  }
}

TEST_CASE("construction rejects non-finite entries") {
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, std::nan("")}}), NonFiniteError);
  CHECK_THROWS_AS(Matrix::from_data(1, 2, {1.0, INFINITY}), NonFiniteError);
  CHECK_THROWS_AS(Matrix::from_data(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(Matrix(0, 3), DimensionError);
  CHECK_THROWS_AS(DiagonalVector({1.0, std::nan("")}), NonFiniteError);
}

TEST_CASE("unit upper triangular invariants are unrepresentable as broken") {
  UnitUpperTriangular u(3);
  u.set(0, 1, 5.0);
  u.set(1, 2, -2.0);
  CHECK(u.at(0, 0) == 1.0);
  CHECK(u.at(1, 1) == 1.0);
  CHECK(u.at(2, 2) == 1.0);
  CHECK(u.at(1, 0) == 0.0);
  CHECK(u.at(2, 0) == 0.0);
  CHECK(u.at(0, 1) == 5.0);
  CHECK_THROWS_AS(u.set(1, 1, 2.0), DimensionError);
  CHECK_THROWS_AS(u.set(2, 1, 2.0), DimensionError);
  CHECK_THROWS_AS(u.set(0, 3, 2.0), DimensionError);

  const Matrix m = u.to_matrix();
  CHECK(m(0, 0) == 1.0);
  CHECK(m(2, 0) == 0.0);
  CHECK(m(1, 2) == -2.0);
}

TEST_CASE("uut_mul stays unit upper and matches dense product") {
  PortableRng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 7);
    UnitUpperTriangular a(n), b(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        a.set(i, j, rng.normal());
        b.set(i, j, rng.normal());
      }
    const Matrix want = a.to_matrix() * b.to_matrix();
    CHECK(entries_equal(uut_mul(a, b).to_matrix(), want, 1e-12 * (1.0 + max_abs(want))));
  }
}

TEST_CASE("reconstruct examples") {
  const UnitUpperTriangular i2(2);
  DiagonalVector ones(2);
  ones[0] = ones[1] = 1.0;
  CHECK(entries_equal(reconstruct(i2, ones), Matrix::identity(2)));

  DiagonalVector d35(2);
  d35[0] = 3.0;
  d35[1] = 5.0;
  CHECK(entries_equal(reconstruct(i2, d35), Matrix::diagonal({3.0, 5.0})));

  UnitUpperTriangular u(2);
  u.set(0, 1, 1.0);
  CHECK(entries_equal(reconstruct(u, ones), Matrix::from_rows({{2, 1}, {1, 1}})));
}

TEST_CASE("reconstruct output is bitwise symmetric") {
  PortableRng rng(13);
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 9);
    UnitUpperTriangular u(n);
    DiagonalVector d(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = rng.uniform() * 10.0;
      for (std::size_t j = i + 1; j < n; ++j) u.set(i, j, rng.normal());
    }
    const Matrix p = reconstruct(u, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) CHECK(p(i, j) == p(j, i));
  }
}

TEST_CASE("diagonal vector sign query is exact") {
  DiagonalVector d(3);
  d[0] = 1.0;
  d[1] = -1e-30;
  d[2] = 3.0;
  auto idx = d.first_negative();
  REQUIRE(idx.has_value());
  CHECK(*idx == 1);

  DiagonalVector zeros(2);
  CHECK(!zeros.first_negative().has_value());
}

TEST_CASE("unit triangular vector products") {
  UnitUpperTriangular u(3);
  u.set(0, 1, 2.0);
  u.set(0, 2, -1.0);
  u.set(1, 2, 0.5);
  const std::vector<double> x{1.0, 2.0, 3.0};
  const Matrix um = u.to_matrix();

  const auto ux = u.times(x);
  const auto ux_want = mat_vec(um, x);
  const auto utx = u.transpose_times(x);
  const auto utx_want = mat_vec(transpose(um), x);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(ux[i] == doctest::Approx(ux_want[i]).epsilon(1e-15));
    CHECK(utx[i] == doctest::Approx(utx_want[i]).epsilon(1e-15));
  }
}
