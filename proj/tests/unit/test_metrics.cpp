#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cavkit/linalg.hpp"
#include "cavkit/metrics.hpp"
#include "cavkit/probes.hpp"
#include "helpers.hpp"

using namespace cavkit;
using namespace cavkit::metrics;
using testing::code_of;

namespace {

double pairwise_auc(std::span<const double> pos, std::span<const double> neg) {
  double s = 0.0;
  for (double p : pos) {
    for (double n : neg) s += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
  }
  return s / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

// Scores drawn from a small integer range so ties are common.
Vector tied_scores(Rng& rng, std::size_t n, double shift) {
  Vector v(n);
  for (double& x : v) x = std::floor(rng.uniform() * 8) + shift;
  return v;
}

// J for one threshold, predicting positive when score > t.
double youden_j(std::span<const double> scores, std::span<const int> labels, double t) {
  double tp = 0, fp = 0, np = 0, nn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool hit = scores[i] > t;
    if (labels[i]) {
      ++np;
      tp += hit;
    } else {
      ++nn;
      fp += hit;
    }
  }
  return tp / np - fp / nn;
}

}  // namespace

TEST_CASE("auc examples") {
  CHECK(auc(Vector{2, 3}, Vector{0, 1}) == 1.0);
  CHECK(auc(Vector{0, 1}, Vector{2, 3}) == 0.0);
  CHECK(auc(Vector{1}, Vector{1}) == 0.5);
  CHECK(auc(Vector{1}, Vector{1}, TieRule::strict) == 0.0);
  CHECK(code_of([] { auc(Vector{}, Vector{1}); }) == ErrorCode::EmptySide);
}

TEST_CASE("fast auc equals the pairwise oracle") {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t np = 1 + rng.below(200);
    const std::size_t nn = 1 + rng.below(200);
    const bool ties = t % 2 == 0;
    const Vector pos = ties ? tied_scores(rng, np, 1.0) : testing::random_vector(rng, np);
    const Vector neg = ties ? tied_scores(rng, nn, 0.0) : testing::random_vector(rng, nn);
    CHECK(std::abs(auc(pos, neg) - pairwise_auc(pos, neg)) <= 1e-12);
    CHECK(auc(pos, neg) + auc(neg, pos) == 1.0);
  }
}

TEST_CASE("auc is invariant to strictly increasing transforms") {
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const Vector pos = tied_scores(rng, 30, 0.5);
    const Vector neg = tied_scores(rng, 40, 0.0);
    Vector tp = pos;
    Vector tn = neg;
    for (double& x : tp) x = std::exp(x) * 3 - 1;
    for (double& x : tn) x = std::exp(x) * 3 - 1;
    CHECK(auc(pos, neg) == auc(tp, tn));
  }
}

TEST_CASE("mad") {
  CHECK(mad({{2, 4}, {0, 2}}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(mad({{1, 3}, {0, 4}}) == 0.0);
  CHECK(code_of([] { mad({{1, 2}, {1, 1}}); }) == ErrorCode::DegenerateNegatives);
  CHECK(code_of([] { mad({{1, 2}, {1}}); }) == ErrorCode::DegenerateNegatives);
}

TEST_CASE("max similarity") {
  const Vector t{1, 0};
  const Vector a{0, 1};
  const Vector b{std::sqrt(0.5), std::sqrt(0.5)};
  CHECK(max_similarity(t, {a, b}) == doctest::Approx(0.70710678).epsilon(1e-8));
  const Vector anti{-1, 0};
  CHECK(max_similarity(t, {anti}) == -1.0);
  CHECK(max_similarity(t, {a}) == 0.0);
  CHECK(code_of([&] { max_similarity(t, {}); }) == ErrorCode::EmptyOthers);
  const Vector three{1, 0, 0};
  CHECK(code_of([&] { max_similarity(t, {three}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("ccr") {
  // concept along e0, symmetric noise in e1 and e2
  Rng rng(3);
  Matrix m(400, 3);
  IndexSet pos, neg;
  for (std::size_t i = 0; i < 400; ++i) {
    const bool p = i < 200;
    m(i, 0) = (p ? 1.0 : -1.0) + 0.5 * rng.normal();
    m(i, 1) = rng.normal();
    m(i, 2) = rng.normal();
    (p ? pos : neg).push_back(i);
  }
  const Vector target{1, 0, 0};
  const Vector ortho{0, 0, 1};
  const auto r = ccr(m, target, {ortho}, pos, neg);
  CHECK(std::abs(r.value - 1.0) <= 1e-6);
  CHECK(r.retained.size() == 1);

  const auto self = ccr(m, target, {target}, pos, neg);
  CHECK(self.retained[0] == 0.5);
  CHECK(self.value == doctest::Approx(0.5 / self.baseline_auc));

  // a normalized direction whose squared norm is off by roundoff
  const auto oblique = normalize(Vector{0.3, 0.7, 0.1});
  const auto self_oblique = ccr(m, oblique.values(), {oblique.values()}, pos, neg);
  CHECK(self_oblique.retained[0] == 0.5);

  const auto both = ccr(m, target, {ortho, target}, pos, neg);
  CHECK(both.value == self.value);

  // positive scored below the negative: baseline AUC 0
  const Matrix flipped{{0, 0, 0}, {1, 0, 0}};
  CHECK(code_of([&] { ccr(flipped, target, {ortho}, IndexSet{0}, IndexSet{1}); }) ==
        ErrorCode::DegenerateBaseline);
  CHECK(code_of([&] { ccr(m, target, {}, pos, neg); }) == ErrorCode::EmptyOthers);
}

TEST_CASE("youden examples") {
  const auto a = youden_threshold(Vector{0, 1, 2, 3}, std::vector<int>{0, 0, 1, 1});
  CHECK(a.threshold == 1.5);
  CHECK(a.j == 1.0);
  const auto b = youden_threshold(Vector{0, 1, 2, 3}, std::vector<int>{1, 0, 1, 0});
  CHECK(b.threshold == -std::numeric_limits<double>::infinity());
  CHECK(b.j == 0.0);
  CHECK(code_of([] { youden_threshold(Vector{1, 2}, std::vector<int>{1, 1}); }) ==
        ErrorCode::SingleClass);
  CHECK(code_of([] { youden_threshold(Vector{1, 2}, std::vector<int>{1}); }) ==
        ErrorCode::LengthMismatch);
}

TEST_CASE("youden equals brute force over all cut candidates") {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + rng.below(60);
    Vector s = t % 2 ? testing::random_vector(rng, n) : tied_scores(rng, n, 0.0);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(rng.below(2));
    y[0] = 1;
    y[1] = 0;
    Vector u = s;
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    Vector cands{-std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < u.size(); ++i) cands.push_back(0.5 * u[i] + 0.5 * u[i + 1]);
    cands.push_back(std::numeric_limits<double>::infinity());
    double best_j = -2.0;
    double best_t = 0.0;
    for (double c : cands) {
      const double j = youden_j(s, y, c);
      if (j > best_j) {
        best_j = j;
        best_t = c;
      }
    }
    const auto r = youden_threshold(s, y);
    CHECK(r.threshold == best_t);
    CHECK(std::abs(r.j - best_j) <= 1e-15);
  }
}

TEST_CASE("f1") {
  CHECK(f1(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1}).value == 1.0);
  CHECK(f1(std::vector<int>{1, 0, 1}, std::vector<int>{0, 1, 0}).value == 0.0);
  CHECK(f1(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 1, 0}).value == 0.5);
  const auto none = f1(std::vector<int>{0, 0}, std::vector<int>{0, 0});
  CHECK(none.value == 0.0);
  CHECK(none.degenerate);
  CHECK(code_of([] { f1(std::vector<int>{1}, std::vector<int>{1, 0}); }) == ErrorCode::LengthMismatch);

  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<int> y(n), yh(n);
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<int>(rng.below(2));
      yh[i] = static_cast<int>(rng.below(2));
      tp += y[i] && yh[i];
      fp += !y[i] && yh[i];
      fn += y[i] && !yh[i];
    }
    // precision / recall harmonic mean from the confusion matrix
    const double expect = tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
    CHECK(f1(y, yh).value == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("collateral damage and steering disparity") {
  probes::LinearModel probe;
  probe.weights = Matrix{{1.0}};
  probe.intercepts = {0.0};
  // 20 rows; clean accuracy 0.90
  Matrix clean(20, 1), steered(20, 1);
  std::vector<int> labels(20, 1);
  for (std::size_t i = 0; i < 20; ++i) {
    clean(i, 0) = i < 18 ? 1.0 : -1.0;
    steered(i, 0) = i < 17 ? 1.0 : -1.0;
  }
  const auto cd = collateral_damage(probe, clean, steered, labels);
  CHECK(cd.signed_points == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(cd.abs_points == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(collateral_damage(probe, clean, clean, labels).signed_points == 0.0);

  Matrix better(50, 1);
  std::vector<int> l50(50, 1);
  Matrix base50(50, 1);
  for (std::size_t i = 0; i < 50; ++i) {
    base50(i, 0) = i < 45 ? 1.0 : -1.0;
    better(i, 0) = i < 46 ? 1.0 : -1.0;
  }
  const auto neg = collateral_damage(probe, base50, better, l50);
  CHECK(neg.signed_points == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(neg.abs_points == doctest::Approx(2.0).epsilon(1e-12));

  CHECK(steering_disparity_ratio(0.95, 0.95, 0.55) == 0.0);
  CHECK(steering_disparity_ratio(0.95, 0.55, 0.55) == 1.0);
  CHECK(code_of([] { steering_disparity_ratio(0.9, 0.8, 0.9005); }) == ErrorCode::DegenerateGap);

  Matrix infused(20, 1);
  for (std::size_t i = 0; i < 20; ++i) infused(i, 0) = i < 10 ? 1.0 : -1.0;
  const auto sd = steering_disparity(probe, clean, labels, clean, infused, labels);
  CHECK(sd.value == 0.0);
  CHECK(sd.acc_infused == 0.5);
  CHECK(steering_disparity(probe, clean, labels, infused, infused, labels).value == 1.0);
}

TEST_CASE("aggregate") {
  const auto a = aggregate(Vector{1, 1, 1});
  CHECK(a.mean == 1.0);
  CHECK(a.two_se == 0.0);
  const auto b = aggregate(Vector{0, 2});
  CHECK(b.mean == 1.0);
  CHECK(b.two_se == doctest::Approx(2.0).epsilon(1e-15));
  const auto c = aggregate(Vector{7});
  CHECK(c.mean == 7.0);
  CHECK(c.two_se == 0.0);
  CHECK(c.single);
  CHECK(code_of([] { aggregate(Vector{}); }) == ErrorCode::Empty);
}

TEST_CASE("project") {
  const Matrix m{{1, 2}, {3, 4}, {5, 6}};
  const auto s = project(m, IndexSet{0, 2}, IndexSet{1}, Vector{1, 0});
  CHECK(s.pos_scores == Vector{1, 5});
  CHECK(s.neg_scores == Vector{3});
}
