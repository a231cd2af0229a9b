#pragma once

#include <cstdint>
#include <span>

#include "cavkit/matrix.hpp"

namespace cavkit::steer {

enum class Mode : std::uint8_t { orthogonalize, additive };

// h - (v . h) v. Throws DimensionMismatch.
Vector orthogonalize(std::span<const double> h, const UnitVector& v);

// h + alpha v. Throws DimensionMismatch.
Vector additive_steer(std::span<const double> h, const UnitVector& v, double alpha);

// Copy of m with the listed rows orthogonalized against v; other rows are
// copied verbatim. Throws IndexOutOfRange, DimensionMismatch.
Matrix orthogonalize_matrix(const Matrix& m, std::span<const std::size_t> rows,
                            const UnitVector& v);

// Every row orthogonalized.
Matrix orthogonalize_all(const Matrix& m, const UnitVector& v);

struct SteeredBatch {
  Matrix original;
  Matrix steered;
  UnitVector direction;
  Mode mode = Mode::orthogonalize;
  double alpha = 0.0;
};

SteeredBatch steer_batch(const Matrix& m, const UnitVector& v, Mode mode, double alpha = 0.0);

}  // namespace cavkit::steer
