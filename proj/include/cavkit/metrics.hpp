#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cavkit/matrix.hpp"

namespace cavkit::probes {
struct LinearModel;
}

namespace cavkit::metrics {

// Projection scores s(h) = v . h for the concept-positive and
// concept-negative populations.
struct ScorePair {
  Vector pos_scores;
  Vector neg_scores;
};

ScorePair project(const Matrix& m, std::span<const std::size_t> pos_rows,
                  std::span<const std::size_t> neg_rows, std::span<const double> direction);

enum class TieRule : std::uint8_t {
  half,    // a tied positive/negative pair counts 0.5 (Mann-Whitney)
  strict,  // only pos > neg counts
};

// Rank-based ROC AUC in O(n log n). Throws EmptySide.
double auc(std::span<const double> pos, std::span<const double> neg, TieRule ties = TieRule::half);
inline double auc(const ScorePair& s, TieRule ties = TieRule::half) {
  return auc(s.pos_scores, s.neg_scores, ties);
}

// (mean_pos - mean_neg) / std_neg with the n-1 denominator.
// Throws EmptySide, DegenerateNegatives.
double mad(const ScorePair& s);

// max over others of target . other. Throws EmptyOthers, DimensionMismatch.
double max_similarity(std::span<const double> target,
                      const std::vector<std::span<const double>>& others);

struct CcrResult {
  double value = 0.0;
  double baseline_auc = 0.0;
  std::vector<double> retained;  // post-removal AUC per other concept
};

// min_j AUC(v_c | eval sets orthogonalized against v_j) / AUC(v_c | eval sets).
// Throws DegenerateBaseline when the baseline AUC <= 1e-6, EmptyOthers.
CcrResult ccr(const Matrix& m, std::span<const double> target,
              const std::vector<std::span<const double>>& others,
              std::span<const std::size_t> eval_pos, std::span<const std::size_t> eval_neg,
              TieRule ties = TieRule::half);

struct YoudenResult {
  double threshold = 0.0;  // predict positive when score > threshold
  double j = 0.0;
};

// Threshold maximizing TPR - FPR over -inf, midpoints of consecutive distinct
// scores, and +inf; ties go to the lower threshold. Throws SingleClass,
// LengthMismatch.
YoudenResult youden_threshold(std::span<const double> scores, std::span<const int> labels);

struct F1Result {
  double value = 0.0;
  bool degenerate = false;  // no positives in y or y_hat
};

// 2 TP / (#{y = 1} + #{y_hat = 1}). Throws LengthMismatch.
F1Result f1(std::span<const int> y, std::span<const int> y_hat);

struct CollateralDamage {
  double signed_points = 0.0;  // (acc_clean - acc_steered) * 100
  double abs_points = 0.0;
  double acc_clean = 0.0;
  double acc_steered = 0.0;
};

CollateralDamage collateral_damage(const probes::LinearModel& probe, const Matrix& clean_absent,
                                   const Matrix& steered_absent, std::span<const int> task_labels);

inline constexpr double kSteeringGapEpsilon = 1e-3;

struct SteeringDisparity {
  double value = 0.0;
  double acc_clean = 0.0;
  double acc_steered_infused = 0.0;
  double acc_infused = 0.0;
};

// (acc(clean) - acc(steered infused)) / (acc(clean) - acc(infused)).
// Throws DegenerateGap when |denominator| <= kSteeringGapEpsilon.
SteeringDisparity steering_disparity(const probes::LinearModel& probe, const Matrix& clean_absent,
                                     std::span<const int> clean_labels,
                                     const Matrix& steered_infused, const Matrix& infused,
                                     std::span<const int> infused_labels);

// Closed-form SD from the three accuracies (fractions).
double steering_disparity_ratio(double acc_clean, double acc_steered_infused, double acc_infused);

struct Aggregate {
  double mean = 0.0;
  double two_se = 0.0;
  std::size_t count = 0;
  bool single = false;  // n = 1, two_se reported as 0
};

// mean and 2 * sample_std / sqrt(n). Throws Empty.
Aggregate aggregate(std::span<const double> values);

}  // namespace cavkit::metrics
