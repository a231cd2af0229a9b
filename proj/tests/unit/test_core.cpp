#include <doctest.h>

#include <cmath>

#include "cavkit/linalg.hpp"
#include "helpers.hpp"

using namespace cavkit;
using testing::code_of;

namespace {

// Cyclic Jacobi on a symmetric matrix; returns the eigenvector of the
// largest eigenvalue.
Vector jacobi_top_eigenvector(Matrix a) {
  const std::size_t n = a.rows();
  Matrix v = Matrix::identity(n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (a(i, i) > a(best, best)) best = i;
  }
  Vector out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = v(k, best);
  return out;
}

}  // namespace

TEST_CASE("mean_rows") {
  const Matrix m{{1, 0}, {3, 0}, {5, -2}, {1, 1}, {-1, -1}};
  CHECK(mean_rows(m, IndexSet{0, 1}) == Vector{2, 0});
  CHECK(mean_rows(m, IndexSet{2}) == Vector{5, -2});
  CHECK(mean_rows(m, IndexSet{3, 4}) == Vector{0, 0});
  CHECK(code_of([&] { mean_rows(m, IndexSet{}); }) == ErrorCode::EmptySelection);
  CHECK(code_of([&] { mean_rows(m, IndexSet{5}); }) == ErrorCode::IndexOutOfRange);
}

TEST_CASE("median_rows") {
  const Matrix m{{0}, {1}, {10}, {2}};
  CHECK(median_rows(m, IndexSet{0, 1, 2}) == Vector{1});
  CHECK(median_rows(m, IndexSet{0, 3}) == Vector{1});
  CHECK(median_rows(m, IndexSet{2}) == Vector{10});
  CHECK(code_of([&] { median_rows(m, IndexSet{}); }) == ErrorCode::EmptySelection);
}

TEST_CASE("mean and median agree exactly on two-row inputs") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const Matrix m = testing::random_matrix(rng, 2, 7, std::pow(10.0, rng.uniform() * 6 - 3));
    CHECK(mean_rows(m, IndexSet{0, 1}) == median_rows(m, IndexSet{0, 1}));
  }
}

TEST_CASE("first_pc examples") {
  const Matrix a{{-1, 0}, {1, 0}};
  const auto pc = first_pc(a, IndexSet{0, 1}, true);
  CHECK(pc.direction[0] == doctest::Approx(1.0));
  CHECK(std::abs(pc.direction[1]) < 1e-12);

  const Matrix b{{0, 0}, {1, 1}, {2, 2}};
  const auto pb = first_pc(b, IndexSet{0, 1, 2}, true);
  CHECK(pb.direction[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
  CHECK(pb.direction[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

  const Matrix c{{3, 3}, {3, 3}};
  CHECK(code_of([&] { first_pc(c, IndexSet{0, 1}, true); }) == ErrorCode::DegenerateVariance);
  const Matrix z{{0, 0}, {0, 0}};
  CHECK(code_of([&] { first_pc(z, IndexSet{0, 1}, false); }) == ErrorCode::DegenerateVariance);
}

TEST_CASE("first_pc sign convention makes the largest entry positive") {
  const Matrix m{{0, -3}, {0, 3}, {0.1, 0}};
  const auto pc = first_pc(m, IndexSet{0, 1, 2}, true);
  CHECK(pc.direction[1] > 0.9);
}

TEST_CASE("first_pc matches a Jacobi eigendecomposition oracle") {
  Rng rng(17);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + rng.below(8);
    const std::size_t n = 2 + rng.below(31);
    Matrix m = testing::random_matrix(rng, n, d);
    // a dominant axis keeps the top eigenvalue separated
    const Vector axis = testing::random_vector(rng, d);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = 3.0 * rng.normal();
      for (std::size_t j = 0; j < d; ++j) m(i, j) += s * axis[j];
    }
    const bool center = t % 2 == 0;
    const IndexSet rows = all_rows(n);
    const auto pc = first_pc(m, rows, center);
    const Vector oracle = jacobi_top_eigenvector(covariance(m, rows, center));
    CAPTURE(d);
    CAPTURE(n);
    CHECK(std::abs(testing::cos_sim(pc.direction.values(), oracle)) >= 1.0 - 1e-8);
    CHECK(std::abs(norm(pc.direction.values()) - 1.0) <= 1e-12);
  }
}

TEST_CASE("cosine") {
  CHECK(cosine(Vector{1, 0}, Vector{0, 1}) == 0.0);
  CHECK(cosine(Vector{2, 0}, Vector{1, 0}) == 1.0);
  CHECK(cosine(Vector{1, 0}, Vector{1, 1}) == doctest::Approx(0.70710678).epsilon(1e-9));
  CHECK(code_of([&] { cosine(Vector{0, 0}, Vector{1, 0}); }) == ErrorCode::ZeroNorm);
}

TEST_CASE("cosine is invariant to positive rescaling") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const Vector u = testing::random_vector(rng, 9);
    const Vector v = testing::random_vector(rng, 9);
    Vector su = u;
    Vector sv = v;
    const double a = std::exp(rng.normal() * 3);
    const double b = std::exp(rng.normal() * 3);
    for (double& x : su) x *= a;
    for (double& x : sv) x *= b;
    CHECK(std::abs(cosine(u, v) - cosine(su, sv)) <= 1e-12);
  }
}

TEST_CASE("normalize") {
  const auto a = normalize(Vector{3, 4});
  CHECK(a[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(a[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(normalize(Vector{1, 0}).vector() == Vector{1, 0});
  CHECK(code_of([&] { normalize(Vector{0, 0}); }) == ErrorCode::ZeroNorm);
}

TEST_CASE("normalize is exactly idempotent") {
  Rng rng(9);
  for (int t = 0; t < 2000; ++t) {
    const Vector v = testing::random_vector(rng, 1 + rng.below(40), std::exp(rng.normal() * 4));
    const auto once = normalize(v);
    CHECK(normalize(once.values()) == once);
  }
}

TEST_CASE("UnitVector rejects payloads off the unit sphere") {
  CHECK(code_of([] { UnitVector(Vector{1.0, 1e-2}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { UnitVector(Vector{1.0, 1e-2}); }).has_value());
  CHECK_FALSE(code_of([] { UnitVector(Vector{1.0 + 5e-7}); }).has_value());
}

TEST_CASE("covariance uses the population convention") {
  const Matrix m{{0}, {2}};
  CHECK(covariance(m, IndexSet{0, 1}, true)(0, 0) == 1.0);
  CHECK(covariance(m, IndexSet{0, 1}, false)(0, 0) == 2.0);
}

TEST_CASE("embedding invariants") {
  CHECK(code_of([] { validate_embeddings(Matrix(0, 3)); }) == ErrorCode::InvalidArgument);
  Matrix m(1, 2);
  m(0, 1) = std::nan("");
  CHECK(code_of([&] { validate_embeddings(m); }) == ErrorCode::NonFiniteValue);
}
