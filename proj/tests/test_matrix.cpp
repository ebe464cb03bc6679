#include <doctest.h>

#include <cmath>
#include <limits>

#include "dropfact/errors.hpp"
#include "dropfact/matrix.hpp"
#include "support.hpp"

using namespace dropfact;
using namespace dropfact::testing;

TEST_CASE("DenseMatrix construction validates shape and entries") {
  CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0, std::nan("")}), ParameterError);
  CHECK_THROWS_AS(DenseMatrix(1, 1, {std::numeric_limits<double>::infinity()}), ParameterError);
  const DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(a(1, 2) == 6.0);
  CHECK(a.transposed()(2, 1) == 6.0);
  CHECK(a.column(1) == std::vector<double>{2, 5});
}

TEST_CASE("matmul and matmul_transposed agree with triple loops") {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const std::size_t m = pick(rng, 1, 9), k = pick(rng, 1, 9), n = pick(rng, 1, 9);
    const DenseMatrix a = random_matrix(rng, m, k);
    const DenseMatrix b = random_matrix(rng, n, k);
    CHECK(max_abs_diff(matmul_transposed(a, b), ref_product(a, b)) < 1e-13);
    CHECK(max_abs_diff(matmul(a, b.transposed()), ref_product(a, b)) < 1e-13);
  }
  CHECK_THROWS_AS(matmul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
  CHECK_THROWS_AS(matmul_transposed(DenseMatrix(2, 3), DenseMatrix(2, 2)), DimensionError);
  CHECK_THROWS_AS(DenseMatrix(2, 3) + DenseMatrix(3, 2), DimensionError);
}

TEST_CASE("norms") {
  const DenseMatrix a(2, 2, {3, 0, 0, 4});
  CHECK(frobenius_norm_squared(a) == 25.0);
  CHECK(frobenius_norm(a) == 5.0);
  CHECK(column_norms_squared(a) == std::vector<double>{9, 16});
}

TEST_CASE("FactorPair requires matching widths") {
  CHECK_THROWS_AS(FactorPair(DenseMatrix(3, 2), DenseMatrix(3, 1)), DimensionError);
  const FactorPair f(DenseMatrix(3, 2), DenseMatrix(4, 2));
  CHECK(f.width() == 2);
  CHECK(f.product().rows() == 3);
  CHECK(f.product().cols() == 4);
}
