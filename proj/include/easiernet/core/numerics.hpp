#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace easiernet {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  /// Copies the listed rows, in order, into a new matrix.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix relu(const Matrix& x);
/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& x);

bool all_finite(const Matrix& m);
bool all_finite(std::span<const double> v);

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Seed for the index-th child of a master seed; independent of how many
/// other children are derived or in which order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Deterministic random stream backed by SplitMix64: a Weyl counter advanced
/// by 0x9E3779B97F4A7C15 per draw, passed through mix64. Identical seeds give
/// identical sequences on every platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 bits of resolution.
  double next_double() noexcept;
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (one draw per call, no cached spare).
  double normal() noexcept;
  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t uniform_index(std::uint64_t bound);
  /// Fisher-Yates shuffle.
  void shuffle(std::span<std::size_t> values);

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

std::vector<double> uniform_draws(RngStream& rng, double lo, double hi, std::size_t n);

}  // namespace easiernet
