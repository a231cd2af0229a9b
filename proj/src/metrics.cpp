#include "cavkit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "cavkit/error.hpp"
#include "cavkit/probes.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit::metrics {

ScorePair project(const Matrix& m, std::span<const std::size_t> pos_rows,
                  std::span<const std::size_t> neg_rows, std::span<const double> direction) {
  if (direction.size() != m.cols()) fail(ErrorCode::DimensionMismatch, "direction length != d");
  check_indices(pos_rows, m.rows());
  check_indices(neg_rows, m.rows());
  ScorePair out;
  out.pos_scores.reserve(pos_rows.size());
  out.neg_scores.reserve(neg_rows.size());
  for (std::size_t i : pos_rows) out.pos_scores.push_back(simd::dot(m.row(i), direction));
  for (std::size_t i : neg_rows) out.neg_scores.push_back(simd::dot(m.row(i), direction));
  return out;
}

double auc(std::span<const double> pos, std::span<const double> neg, TieRule ties) {
  if (pos.empty() || neg.empty()) fail(ErrorCode::EmptySide, "AUC needs both sides non-empty");
  Vector sorted(neg.begin(), neg.end());
  std::sort(sorted.begin(), sorted.end());
  // counted in half units so the complement identity holds exactly
  std::uint64_t twice = 0;
  for (double p : pos) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), p);
    const auto hi = std::upper_bound(lo, sorted.end(), p);
    twice += 2 * static_cast<std::uint64_t>(lo - sorted.begin());
    if (ties == TieRule::half) twice += static_cast<std::uint64_t>(hi - lo);
  }
  const auto total = 2 * static_cast<std::uint64_t>(pos.size()) * neg.size();
  return static_cast<double>(twice) / static_cast<double>(total);
}

double mad(const ScorePair& s) {
  if (s.pos_scores.empty() || s.neg_scores.empty()) {
    fail(ErrorCode::EmptySide, "MAD needs both sides non-empty");
  }
  if (s.neg_scores.size() < 2) fail(ErrorCode::DegenerateNegatives, "MAD needs >= 2 negatives");
  auto mean = [](const Vector& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  };
  const double mu_pos = mean(s.pos_scores);
  const double mu_neg = mean(s.neg_scores);
  double ss = 0.0;
  for (double x : s.neg_scores) ss += (x - mu_neg) * (x - mu_neg);
  const double sd = std::sqrt(ss / static_cast<double>(s.neg_scores.size() - 1));
  if (!(sd > 1e-12)) fail(ErrorCode::DegenerateNegatives, "negative scores have zero spread");
  return (mu_pos - mu_neg) / sd;
}

double max_similarity(std::span<const double> target,
                      const std::vector<std::span<const double>>& others) {
  if (others.empty()) fail(ErrorCode::EmptyOthers, "MS needs at least one other CAV");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& o : others) {
    if (o.size() != target.size()) fail(ErrorCode::DimensionMismatch, "CAV lengths differ");
    best = std::max(best, simd::dot(target, o));
  }
  return best;
}

CcrResult ccr(const Matrix& m, std::span<const double> target,
              const std::vector<std::span<const double>>& others,
              std::span<const std::size_t> eval_pos, std::span<const std::size_t> eval_neg,
              TieRule ties) {
  if (others.empty()) fail(ErrorCode::EmptyOthers, "CCR needs at least one other CAV");
  const ScorePair base = project(m, eval_pos, eval_neg, target);
  CcrResult out;
  out.baseline_auc = auc(base, ties);
  if (!(out.baseline_auc > 1e-6)) fail(ErrorCode::DegenerateBaseline, "baseline AUC is ~0");

  out.value = std::numeric_limits<double>::infinity();
  for (const auto& other : others) {
    if (other.size() != target.size()) fail(ErrorCode::DimensionMismatch, "CAV lengths differ");
    // target . (h - (o . h) o) = (target - (target . o) o) . h
    const double overlap = simd::dot(target, other);
    std::vector<double> residual(target.begin(), target.end());
    simd::axpy(-overlap, other, residual);
    // a parallel other leaves only roundoff, which would still rank rows by the target score
    if (simd::dot(residual, residual) <= 1e-24 * simd::dot(target, target)) {
      std::fill(residual.begin(), residual.end(), 0.0);
    }
    const ScorePair removed = project(m, eval_pos, eval_neg, residual);
    const double retained = auc(removed, ties);
    out.retained.push_back(retained);
    out.value = std::min(out.value, retained / out.baseline_auc);
  }
  return out;
}

YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) fail(ErrorCode::LengthMismatch, "scores/labels differ");
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += y == 1 ? 1 : 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::SingleClass, "Youden needs both classes");

  IndexSet order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sweep thresholds upward; above each candidate cut, everything not yet
  // passed is predicted positive.
  YoudenResult best{-std::numeric_limits<double>::infinity(), 0.0};
  std::size_t below_pos = 0;
  std::size_t below_neg = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = scores[order[i]];
    while (i < order.size() && scores[order[i]] == value) {
      (labels[order[i]] == 1 ? below_pos : below_neg) += 1;
      ++i;
    }
    const double threshold = i < order.size() ? 0.5 * value + 0.5 * scores[order[i]]
                                              : std::numeric_limits<double>::infinity();
    const double tpr = static_cast<double>(n_pos - below_pos) / static_cast<double>(n_pos);
    const double fpr = static_cast<double>(n_neg - below_neg) / static_cast<double>(n_neg);
    if (tpr - fpr > best.j) best = {threshold, tpr - fpr};
  }
  return best;
}

F1Result f1(std::span<const int> y, std::span<const int> y_hat) {
  if (y.size() != y_hat.size()) fail(ErrorCode::LengthMismatch, "y and y_hat differ in length");
  std::size_t tp = 0;
  std::size_t actual = 0;
  std::size_t predicted = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    actual += y[i] == 1 ? 1 : 0;
    predicted += y_hat[i] == 1 ? 1 : 0;
    tp += (y[i] == 1 && y_hat[i] == 1) ? 1 : 0;
  }
  if (actual + predicted == 0) return {0.0, true};
  return {2.0 * static_cast<double>(tp) / static_cast<double>(actual + predicted), false};
}

CollateralDamage collateral_damage(const probes::LinearModel& probe, const Matrix& clean_absent,
                                   const Matrix& steered_absent, std::span<const int> task_labels) {
  if (clean_absent.rows() != steered_absent.rows()) {
    fail(ErrorCode::DimensionMismatch, "clean and steered sets differ in size");
  }
  CollateralDamage out;
  out.acc_clean = probes::predict_accuracy(probe, clean_absent, task_labels);
  out.acc_steered = probes::predict_accuracy(probe, steered_absent, task_labels);
  out.signed_points = (out.acc_clean - out.acc_steered) * 100.0;
  out.abs_points = std::abs(out.signed_points);
  return out;
}

double steering_disparity_ratio(double acc_clean, double acc_steered_infused, double acc_infused) {
  const double gap = acc_clean - acc_infused;
  if (!(std::abs(gap) > kSteeringGapEpsilon)) {
    fail(ErrorCode::DegenerateGap, "clean/infused accuracy gap is below the guard");
  }
  return (acc_clean - acc_steered_infused) / gap;
}

SteeringDisparity steering_disparity(const probes::LinearModel& probe, const Matrix& clean_absent,
                                     std::span<const int> clean_labels,
                                     const Matrix& steered_infused, const Matrix& infused,
                                     std::span<const int> infused_labels) {
  if (steered_infused.rows() != infused.rows()) {
    fail(ErrorCode::DimensionMismatch, "infused and steered sets differ in size");
  }
  SteeringDisparity out;
  out.acc_clean = probes::predict_accuracy(probe, clean_absent, clean_labels);
  out.acc_steered_infused = probes::predict_accuracy(probe, steered_infused, infused_labels);
  out.acc_infused = probes::predict_accuracy(probe, infused, infused_labels);
  out.value = steering_disparity_ratio(out.acc_clean, out.acc_steered_infused, out.acc_infused);
  return out;
}

Aggregate aggregate(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::Empty, "cannot aggregate an empty list");
  Aggregate out;
  out.count = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() == 1) {
    out.single = true;
    return out;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  out.two_se = 2.0 * sd / std::sqrt(static_cast<double>(values.size()));
  return out;
}

}  // namespace cavkit::metrics
