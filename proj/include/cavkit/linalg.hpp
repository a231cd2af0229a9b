#pragma once

#include <cstddef>
#include <span>

#include "cavkit/matrix.hpp"

namespace cavkit {

inline constexpr double kZeroNormTolerance = 1e-12;

IndexSet all_rows(std::size_t n);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

// Element-wise arithmetic mean over the selected rows.
Vector mean_rows(const Matrix& m, std::span<const std::size_t> rows);

// Per-dimension median; an even count takes the midpoint of the middle pair.
Vector median_rows(const Matrix& m, std::span<const std::size_t> rows);

// Population (divide-by-|rows|) second-moment matrix of the selected rows,
// mean-centered when `center` is set.
Matrix covariance(const Matrix& m, std::span<const std::size_t> rows, bool center);

struct PrincipalComponent {
  UnitVector direction;
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  double cosine_tolerance = 1e-10;  // stop once successive iterates agree to 1 - tol
  std::size_t max_iterations = 10000;
};

// Leading eigenvector of covariance(m, rows, center) by power iteration,
// started from the covariance column of largest norm. The entry of largest
// magnitude is made positive. Throws DegenerateVariance when the selected
// rows carry no variance (identical rows when centered, all-zero otherwise).
PrincipalComponent first_pc(const Matrix& m, std::span<const std::size_t> rows, bool center,
                            const PowerIterationOptions& options = {});

// u.v / (|u||v|) clamped to [-1, 1]; ZeroNorm when either norm <= 1e-12.
double cosine(std::span<const double> u, std::span<const double> v);

// v / |v|; ZeroNorm when |v| <= 1e-12. Inputs that are already unit norm to
// within rounding are returned unchanged, so normalize is idempotent.
UnitVector normalize(std::span<const double> v);

}  // namespace cavkit
