#include "cavkit/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cavkit/error.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    fail(ErrorCode::DimensionMismatch, "matrix payload has " + std::to_string(values_.size()) +
                                           " values, expected " + std::to_string(rows * cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) fail(ErrorCode::DimensionMismatch, "ragged matrix literal");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  check_indices(indices, rows_);
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix Matrix::select_cols(std::span<const std::size_t> indices) const {
  check_indices(indices, cols_);
  Matrix out(rows_, indices.size());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < indices.size(); ++j) out(i, j) = (*this)(i, indices[j]);
  }
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  }
  return out;
}

Matrix Matrix::scaled(double factor) const {
  Matrix out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

Vector Matrix::multiply(std::span<const double> x) const {
  if (x.size() != cols_) fail(ErrorCode::DimensionMismatch, "multiply: vector length mismatch");
  Vector y(rows_);
  simd::active().gemv(values_.data(), rows_, cols_, x.data(), y.data());
  return y;
}

Vector Matrix::multiply_transposed(std::span<const double> x) const {
  if (x.size() != rows_) {
    fail(ErrorCode::DimensionMismatch, "multiply_transposed: vector length mismatch");
  }
  Vector y(cols_, 0.0);
  simd::active().gemv_t_acc(values_.data(), rows_, cols_, x.data(), y.data());
  return y;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

void validate_embeddings(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    fail(ErrorCode::InvalidArgument, "embedding matrix must have n >= 1 and d >= 1");
  }
  for (double v : m.values()) {
    if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "embedding matrix has NaN/Inf");
  }
}

void check_indices(std::span<const std::size_t> indices, std::size_t bound) {
  for (std::size_t i : indices) {
    if (i >= bound) {
      fail(ErrorCode::IndexOutOfRange,
           "index " + std::to_string(i) + " >= " + std::to_string(bound));
    }
  }
}

UnitVector::UnitVector(Vector components) : v_(std::move(components)) {
  double n2 = simd::scalar_kernels().dot(v_.data(), v_.data(), v_.size());
  if (std::abs(std::sqrt(n2) - 1.0) > kNormTolerance) {
    fail(ErrorCode::InvalidArgument, "UnitVector payload is not unit norm");
  }
}

}  // namespace cavkit
