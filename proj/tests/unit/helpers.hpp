#pragma once

#include <doctest.h>

#include <cmath>
#include <functional>
#include <optional>

#include "cavkit/error.hpp"
#include "cavkit/matrix.hpp"
#include "cavkit/rng.hpp"

namespace testing {

inline cavkit::Matrix random_matrix(cavkit::Rng& rng, std::size_t n, std::size_t d,
                                    double sigma = 1.0) {
  cavkit::Matrix m(n, d);
  for (double& x : m.values()) x = sigma * rng.normal();
  return m;
}

inline cavkit::Vector random_vector(cavkit::Rng& rng, std::size_t d, double sigma = 1.0) {
  cavkit::Vector v(d);
  for (double& x : v) x = sigma * rng.normal();
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double cos_sim(std::span<const double> a, std::span<const double> b) {
  double ab = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

// Error code thrown by fn, or nullopt when it returns normally.
inline std::optional<cavkit::ErrorCode> code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const cavkit::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing

#define CHECK_CODE(expr, expected) CHECK(testing::code_of([&] { (void)(expr); }) == (expected))
