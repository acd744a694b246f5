#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace edfa {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a * b^T without materializing the transpose.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix transposed_matmul(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double factor);
Matrix transpose(const Matrix& a);

double dbm_to_mw(double dbm);
// Throws std::domain_error for non-positive input.
double mw_to_dbm(double mw);

// Total power of a set of channel powers given in dBm.
double total_power_mw(std::span<const double> powers_dbm);
double total_power_dbm(std::span<const double> powers_dbm);

// Centered moving average; windows shrink at the edges instead of padding.
// Throws std::invalid_argument for an even, zero, or oversized window.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

// xoshiro256** seeded through SplitMix64. The stream is fully specified here
// so that generated datasets are reproducible bit for bit.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }

  // Independent stream keyed by (this stream's seed, label). Does not advance
  // this stream.
  SeededRng child(std::string_view label) const;
  SeededRng child(std::string_view label, std::uint64_t index) const;

 private:
  friend double gaussian(SeededRng& rng, double mean, double sigma);

  std::uint64_t seed_;
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Derives a child seed from a parent seed and a label (FNV-1a + SplitMix64).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

// One draw from N(mean, sigma^2) via the Marsaglia polar method.
// Throws std::domain_error for negative sigma.
double gaussian(SeededRng& rng, double mean, double sigma);

}  // namespace edfa
