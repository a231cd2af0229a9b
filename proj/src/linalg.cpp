#include "cavkit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cavkit/error.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit {
namespace {

void require_rows(const Matrix& m, std::span<const std::size_t> rows) {
  if (rows.empty()) fail(ErrorCode::EmptySelection, "row selection is empty");
  check_indices(rows, m.rows());
}

void sign_largest_positive(Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

// Vectors this close to unit norm are treated as already normalized; the
// bound covers the rounding of a length-4096 dot product.
constexpr double kUnitSnapTolerance = 1e-12;

}  // namespace

IndexSet all_rows(std::size_t n) {
  IndexSet out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "dot: length mismatch");
  return simd::dot(a, b);
}

double norm(std::span<const double> v) { return std::sqrt(simd::dot(v, v)); }

Vector mean_rows(const Matrix& m, std::span<const std::size_t> rows) {
  require_rows(m, rows);
  Vector acc(m.cols(), 0.0);
  for (std::size_t r : rows) simd::axpy(1.0, m.row(r), acc);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& x : acc) x *= inv;
  return acc;
}

Vector median_rows(const Matrix& m, std::span<const std::size_t> rows) {
  require_rows(m, rows);
  const std::size_t n = rows.size();
  Vector out(m.cols());
  Vector column(n);
  for (std::size_t j = 0; j < m.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = m(rows[i], j);
    const std::size_t mid = n / 2;
    std::nth_element(column.begin(), column.begin() + mid, column.end());
    const double upper = column[mid];
    if (n % 2 == 1) {
      out[j] = upper;
    } else {
      const double lower = *std::max_element(column.begin(), column.begin() + mid);
      out[j] = (lower + upper) / 2.0;
    }
  }
  return out;
}

Matrix covariance(const Matrix& m, std::span<const std::size_t> rows, bool center) {
  require_rows(m, rows);
  const std::size_t d = m.cols();
  Vector mu = center ? mean_rows(m, rows) : Vector(d, 0.0);
  Matrix cov(d, d);
  Vector x(d);
  const auto& k = simd::active();
  for (std::size_t r : rows) {
    auto src = m.row(r);
    for (std::size_t j = 0; j < d; ++j) x[j] = src[j] - mu[j];
    for (std::size_t j = 0; j < d; ++j) {
      if (x[j] != 0.0) k.axpy(x[j], x.data(), cov.row(j).data(), d);
    }
  }
  return cov.scaled(1.0 / static_cast<double>(rows.size()));
}

PrincipalComponent first_pc(const Matrix& m, std::span<const std::size_t> rows, bool center,
                            const PowerIterationOptions& options) {
  require_rows(m, rows);
  if (center) {
    if (rows.size() < 2) fail(ErrorCode::DegenerateVariance, "centered PCA needs >= 2 rows");
    auto first = m.row(rows[0]);
    bool identical = std::all_of(rows.begin() + 1, rows.end(), [&](std::size_t r) {
      return std::equal(first.begin(), first.end(), m.row(r).begin());
    });
    if (identical) fail(ErrorCode::DegenerateVariance, "all selected rows are identical");
  }
  const Matrix cov = covariance(m, rows, center);
  const std::size_t d = cov.cols();

  // Start from the covariance column of largest norm (cov is symmetric, so rows == columns).
  std::size_t best = 0;
  double best_norm = -1.0;
  for (std::size_t j = 0; j < d; ++j) {
    double nrm = norm(cov.row(j));
    if (nrm > best_norm) {
      best_norm = nrm;
      best = j;
    }
  }
  if (!(best_norm > 0.0)) fail(ErrorCode::DegenerateVariance, "covariance is zero");

  Vector v(cov.row(best).begin(), cov.row(best).end());
  for (double& x : v) x /= best_norm;

  PrincipalComponent result;
  double lambda = 0.0;
  Vector w(d);
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    simd::active().gemv(cov.values().data(), d, d, v.data(), w.data());
    lambda = norm(w);
    if (!(lambda > 0.0)) fail(ErrorCode::DegenerateVariance, "power iterate collapsed to zero");
    for (double& x : w) x /= lambda;
    const double agreement = dot(v, w);
    v.swap(w);
    if (agreement >= 1.0 - options.cosine_tolerance) {
      result.converged = true;
      ++it;
      break;
    }
  }
  sign_largest_positive(v);
  result.direction = normalize(v);
  result.eigenvalue = lambda;
  result.iterations = it;
  return result;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) fail(ErrorCode::DimensionMismatch, "cosine: length mismatch");
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu <= kZeroNormTolerance || nv <= kZeroNormTolerance) {
    fail(ErrorCode::ZeroNorm, "cosine of a zero-norm vector");
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

UnitVector normalize(std::span<const double> v) {
  const double nrm = norm(v);
  if (!(nrm > kZeroNormTolerance)) fail(ErrorCode::ZeroNorm, "cannot normalize a zero vector");
  Vector out(v.begin(), v.end());
  if (std::abs(nrm - 1.0) > kUnitSnapTolerance) {
    for (double& x : out) x /= nrm;
  }
  return UnitVector(std::move(out));
}

}  // namespace cavkit
