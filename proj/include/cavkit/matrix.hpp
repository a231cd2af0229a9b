#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace cavkit {

using Vector = std::vector<double>;
using IndexSet = std::vector<std::size_t>;

// Row-major dense matrix. Activations are held in double precision in memory
// and stored as f32 on disk (see io.hpp).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  Matrix select_rows(std::span<const std::size_t> indices) const;
  Matrix select_cols(std::span<const std::size_t> indices) const;
  Matrix transposed() const;
  Matrix scaled(double factor) const;

  // y = A x
  Vector multiply(std::span<const double> x) const;
  // y = A^T x
  Vector multiply_transposed(std::span<const double> x) const;

  static Matrix identity(std::size_t n);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// n >= 1 rows, d >= 1 columns, all entries finite.
using EmbeddingMatrix = Matrix;

// Throws NonFiniteValue / InvalidArgument when the embedding invariants fail.
void validate_embeddings(const Matrix& m);

// Checks that every index is < bound; throws IndexOutOfRange otherwise.
void check_indices(std::span<const std::size_t> indices, std::size_t bound);

class UnitVector {
 public:
  static constexpr double kNormTolerance = 1e-6;

  UnitVector() = default;
  // Accepts an already-normalized payload; throws InvalidArgument when
  // | ||v|| - 1 | > kNormTolerance.
  explicit UnitVector(Vector components);

  std::span<const double> values() const noexcept { return v_; }
  const Vector& vector() const noexcept { return v_; }
  std::size_t size() const noexcept { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }

  friend bool operator==(const UnitVector&, const UnitVector&) = default;

 private:
  Vector v_;
};

}  // namespace cavkit
