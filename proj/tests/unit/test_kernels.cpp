#include <doctest.h>

#include <cmath>

#include "cavkit/rng.hpp"
#include "cavkit/simd/kernels.hpp"

using namespace cavkit;

namespace {

std::vector<double> fill(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// rounding allowance for a reassociated sum of n products
double tol(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] * b[i]);
  return 1e-14 * (s + 1.0);
}

}  // namespace

TEST_CASE("scalar table is always available and listed first") {
  const auto tables = simd::available_kernels();
  REQUIRE(!tables.empty());
  CHECK(tables.front()->name == "scalar");
  bool found = false;
  for (const auto* t : tables) found |= t->name == simd::active().name;
  CHECK(found);
}

TEST_CASE("every table agrees with the scalar reference for lengths 0..67") {
  const auto& ref = simd::scalar_kernels();
  Rng rng(11);
  for (const auto* table : simd::available_kernels()) {
    CAPTURE(table->name);
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = fill(rng, n);
      const auto b = fill(rng, n);
      CHECK(std::abs(table->dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <= tol(a, b));

      auto y1 = b;
      auto y2 = b;
      table->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (std::abs(y2[i]) + 1.0));

      for (std::size_t rows : {std::size_t{1}, std::size_t{3}, std::size_t{9}}) {
        const auto A = fill(rng, rows * n);
        const auto x = fill(rng, n);
        std::vector<double> g1(rows), g2(rows);
        table->gemv(A.data(), rows, n, x.data(), g1.data());
        ref.gemv(A.data(), rows, n, x.data(), g2.data());
        for (std::size_t r = 0; r < rows; ++r) CHECK(std::abs(g1[r] - g2[r]) <= 1e-13 * (n + 1.0));

        const auto xr = fill(rng, rows);
        std::vector<double> t1(n, 0.5), t2(n, 0.5);
        table->gemv_t_acc(A.data(), rows, n, xr.data(), t1.data());
        ref.gemv_t_acc(A.data(), rows, n, xr.data(), t2.data());
        for (std::size_t c = 0; c < n; ++c) CHECK(std::abs(t1[c] - t2[c]) <= 1e-13 * (rows + 1.0));
      }
    }
  }
}

TEST_CASE("scalar dot is the textbook left-to-right sum") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{4.0, -5.0, 6.0};
  CHECK(simd::scalar_kernels().dot(a.data(), b.data(), 3) == 12.0);
  CHECK(simd::scalar_kernels().dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("gemv_t_acc accumulates into y") {
  const std::vector<double> A{1, 2, 3, 4, 5, 6};  // 2 x 3
  const std::vector<double> x{1.0, -1.0};
  std::vector<double> y{10.0, 10.0, 10.0};
  for (const auto* t : simd::available_kernels()) {
    auto yy = y;
    t->gemv_t_acc(A.data(), 2, 3, x.data(), yy.data());
    CHECK(yy == std::vector<double>{7.0, 7.0, 7.0});
  }
}
