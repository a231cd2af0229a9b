#include "cavkit/steer.hpp"

#include <algorithm>

#include "cavkit/error.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit::steer {
namespace {

void remove_component(std::span<double> h, std::span<const double> v) {
  const double along = simd::dot(v, h);
  if (along != 0.0) simd::axpy(-along, v, h);
}

}  // namespace

Vector orthogonalize(std::span<const double> h, const UnitVector& v) {
  if (h.size() != v.size()) fail(ErrorCode::DimensionMismatch, "h and v differ in length");
  Vector out(h.begin(), h.end());
  remove_component(out, v.values());
  return out;
}

Vector additive_steer(std::span<const double> h, const UnitVector& v, double alpha) {
  if (h.size() != v.size()) fail(ErrorCode::DimensionMismatch, "h and v differ in length");
  Vector out(h.begin(), h.end());
  simd::axpy(alpha, v.values(), out);
  return out;
}

Matrix orthogonalize_matrix(const Matrix& m, std::span<const std::size_t> rows,
                            const UnitVector& v) {
  if (m.cols() != v.size()) fail(ErrorCode::DimensionMismatch, "matrix width != CAV length");
  check_indices(rows, m.rows());
  Matrix out = m;
  for (std::size_t i : rows) remove_component(out.row(i), v.values());
  return out;
}

Matrix orthogonalize_all(const Matrix& m, const UnitVector& v) {
  if (m.cols() != v.size()) fail(ErrorCode::DimensionMismatch, "matrix width != CAV length");
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) remove_component(out.row(i), v.values());
  return out;
}

SteeredBatch steer_batch(const Matrix& m, const UnitVector& v, Mode mode, double alpha) {
  if (m.cols() != v.size()) fail(ErrorCode::DimensionMismatch, "matrix width != CAV length");
  SteeredBatch out{m, m, v, mode, alpha};
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (mode == Mode::orthogonalize) {
      remove_component(out.steered.row(i), v.values());
    } else {
      simd::axpy(alpha, v.values(), out.steered.row(i));
    }
  }
  return out;
}

}  // namespace cavkit::steer
