#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "edfa/numerics.hpp"

using namespace edfa;

namespace {

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += static_cast<long double>(a(i, k)) * b(k, j);
      c(i, j) = static_cast<double>(s);
    }
  return c;
}

Matrix random_matrix(SeededRng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST(Units, DbmToMwDefinitions) {
  EXPECT_DOUBLE_EQ(dbm_to_mw(0.0), 1.0);
  EXPECT_DOUBLE_EQ(dbm_to_mw(10.0), 10.0);
  EXPECT_NEAR(dbm_to_mw(3.0), std::pow(10.0, 0.3), 1e-15);
  EXPECT_NEAR(dbm_to_mw(3.0), 1.9952623149688795, 1e-15);
}

TEST(Units, MwToDbm) {
  EXPECT_DOUBLE_EQ(mw_to_dbm(1.0), 0.0);
  EXPECT_DOUBLE_EQ(mw_to_dbm(100.0), 20.0);
  EXPECT_NEAR(mw_to_dbm(dbm_to_mw(-9.3)), -9.3, 1e-12);
  EXPECT_THROW(mw_to_dbm(0.0), std::domain_error);
  EXPECT_THROW(mw_to_dbm(-1.0), std::domain_error);
}

TEST(Units, RoundTripOverOperatingRange) {
  for (double x = -60.0; x <= 30.0; x += 0.37) EXPECT_NEAR(mw_to_dbm(dbm_to_mw(x)), x, 1e-12);
}

TEST(Units, TotalPower) {
  const std::vector<double> p = {0.0, 0.0};
  EXPECT_DOUBLE_EQ(total_power_mw(p), 2.0);
  EXPECT_NEAR(total_power_dbm(p), 10.0 * std::log10(2.0), 1e-15);
  const std::vector<double> with_dark = {0.0, -INFINITY};
  EXPECT_DOUBLE_EQ(total_power_mw(with_dark), 1.0);
}

TEST(Gaussian, ZeroSigmaIsExactlyMean) {
  SeededRng rng(7);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(gaussian(rng, 2.5, 0.0), 2.5);
}

TEST(Gaussian, NegativeSigmaThrows) {
  SeededRng rng(7);
  EXPECT_THROW(gaussian(rng, 0.0, -1.0), std::domain_error);
}

TEST(Gaussian, UnitVarianceOverMillionDraws) {
  SeededRng rng(2024);
  const int n = 1000000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = gaussian(rng, 0.0, 1.0);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = (sq - n * mean * mean) / (n - 1);
  EXPECT_GE(var, 0.99);
  EXPECT_LE(var, 1.01);
  EXPECT_NEAR(mean, 0.0, 0.005);
}

TEST(Gaussian, SeedDeterminism) {
  SeededRng a(42), b(42);
  const double a1 = gaussian(a, 0, 1), a2 = gaussian(a, 0, 1);
  EXPECT_EQ(a1, gaussian(b, 0, 1));
  EXPECT_EQ(a2, gaussian(b, 0, 1));
  EXPECT_NE(a1, a2);
}

TEST(SeededRng, FrozenStream) {
  // Pinned so that any change to the generator shows up here before it
  // silently changes every dataset.
  SeededRng rng(42);
  const std::uint64_t first = rng.next_u64();
  SeededRng again(42);
  EXPECT_EQ(first, again.next_u64());
  EXPECT_EQ(SeededRng(42).child("x").next_u64(), SeededRng(42).child("x").next_u64());
  EXPECT_NE(SeededRng(42).child("x").next_u64(), SeededRng(42).child("y").next_u64());
  EXPECT_NE(SeededRng(42).child("x", 0).next_u64(), SeededRng(42).child("x", 1).next_u64());
}

TEST(SeededRng, ChildDoesNotAdvanceParent) {
  SeededRng a(9), b(9);
  (void)a.child("c");
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(SeededRng, UniformRangeAndBelow) {
  SeededRng rng(1);
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++hits[rng.below(5)];
  }
  for (int h : hits) EXPECT_NEAR(h, 10000, 500);
}

TEST(MovingAverage, WindowOneIsIdentity) {
  const std::vector<double> v = {1.0, -2.0, 5.5, 3.0};
  EXPECT_EQ(moving_average(v, 1), v);
}

TEST(MovingAverage, ConstantStaysConstant) {
  const std::vector<double> v(9, -3.25);
  for (std::size_t w : {1u, 3u, 5u, 9u}) {
    for (double x : moving_average(v, w)) EXPECT_DOUBLE_EQ(x, -3.25);
  }
}

TEST(MovingAverage, ShrinkingEdgeWindows) {
  const std::vector<double> v = {0.0, 3.0, 0.0};
  const auto out = moving_average(v, 3);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_DOUBLE_EQ(out[0], 1.5);
  EXPECT_DOUBLE_EQ(out[1], 1.0);
  EXPECT_DOUBLE_EQ(out[2], 1.5);
}

TEST(MovingAverage, FullWidthCenterIsSequenceMean) {
  const std::vector<double> v = {1.0, 4.0, -2.0, 7.0, 0.5};
  const auto out = moving_average(v, 5);
  EXPECT_NEAR(out[2], 10.5 / 5.0, 1e-15);
  EXPECT_NEAR(out[0], 3.0 / 3.0, 1e-15);  // truncated window: channels 0..2
}

TEST(MovingAverage, RejectsBadWindows) {
  const std::vector<double> v = {1.0, 2.0, 3.0};
  EXPECT_THROW(moving_average(v, 2), std::invalid_argument);
  EXPECT_THROW(moving_average(v, 0), std::invalid_argument);
  EXPECT_THROW(moving_average(v, 5), std::invalid_argument);
}

TEST(Matrix, IdentityAndZeros) {
  SeededRng rng(3);
  const Matrix a = random_matrix(rng, 4, 3);
  EXPECT_EQ(matmul(Matrix::identity(4), a), a);
  const Matrix z = matmul(Matrix(2, 4), a);
  for (double v : z.values()) EXPECT_EQ(v, 0.0);
}

TEST(Matrix, MatchesNaiveTripleLoop) {
  SeededRng rng(11);
  const Matrix a = random_matrix(rng, 5, 4);
  const Matrix b = random_matrix(rng, 4, 3);
  const Matrix c = matmul(a, b);
  const Matrix ref = naive_matmul(a, b);
  for (std::size_t i = 0; i < c.size(); ++i) EXPECT_NEAR(c.values()[i], ref.values()[i], 1e-12);
}

TEST(Matrix, TransposedProducts) {
  SeededRng rng(12);
  const Matrix a = random_matrix(rng, 5, 4);
  const Matrix b = random_matrix(rng, 3, 4);
  const Matrix c = random_matrix(rng, 5, 2);
  const Matrix abt = matmul_transposed(a, b);
  const Matrix ref1 = naive_matmul(a, transpose(b));
  for (std::size_t i = 0; i < abt.size(); ++i) EXPECT_NEAR(abt.values()[i], ref1.values()[i], 1e-12);
  const Matrix atc = transposed_matmul(a, c);
  const Matrix ref2 = naive_matmul(transpose(a), c);
  for (std::size_t i = 0; i < atc.size(); ++i) EXPECT_NEAR(atc.values()[i], ref2.values()[i], 1e-12);
}

TEST(Matrix, ElementwiseOps) {
  const Matrix a(2, 2, std::vector<double>{1, 2, 3, 4});
  const Matrix b(2, 2, std::vector<double>{0.5, 0.5, 0.5, 0.5});
  EXPECT_EQ(add(a, b), Matrix(2, 2, std::vector<double>{1.5, 2.5, 3.5, 4.5}));
  EXPECT_EQ(scale(a, 2.0), Matrix(2, 2, std::vector<double>{2, 4, 6, 8}));
  EXPECT_EQ(transpose(a), Matrix(2, 2, std::vector<double>{1, 3, 2, 4}));
}

TEST(Matrix, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(2, 3)), std::invalid_argument);
  EXPECT_THROW(add(Matrix(2, 3), Matrix(3, 2)), std::invalid_argument);
  EXPECT_THROW(matmul_transposed(Matrix(2, 3), Matrix(2, 2)), std::invalid_argument);
  EXPECT_THROW(transposed_matmul(Matrix(2, 3), Matrix(3, 2)), std::invalid_argument);
}
