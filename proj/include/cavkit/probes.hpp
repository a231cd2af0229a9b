#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cavkit/matrix.hpp"

namespace cavkit::probes {

enum class Penalty : std::uint8_t { l1, l2 };
enum class Loss : std::uint8_t { logistic, squared_hinge, softmax };

// Binary models hold a 1 x d weight row and one intercept; the softmax task
// probe holds one row and one intercept per class.
struct LinearModel {
  Matrix weights;
  Vector intercepts;
  Penalty penalty = Penalty::l2;
  double C = 1.0;
  Loss loss = Loss::logistic;
  std::size_t iterations = 0;
  bool converged = false;

  std::size_t input_dim() const noexcept { return weights.cols(); }
  std::span<const double> coefficients() const { return weights.row(0); }
  // Binary decision value w . x + b.
  double decision(std::span<const double> x) const;
  Vector decisions(const Matrix& X) const;
  int predict(std::span<const double> x) const;
};

struct SolverOptions {
  std::size_t max_iterations = 10000;
  double tolerance = 1e-8;  // relative objective decrease
};

// Class weight for label y when balancing: (largest class count) / count(y),
// so the majority class keeps weight 1.
std::vector<double> balanced_sample_weights(std::span<const int> y);

// Minimizes R(w) + C * sum_i s_i * loss(y_i, w . x_i + b) with accelerated
// proximal gradient (R = ||w||^2 / 2 for L2, ||w||_1 for L1). The intercept
// is fitted and unpenalized. Labels are 0/1. Throws SingleClass,
// NonFiniteLoss, DimensionMismatch.
LinearModel fit_logistic(const Matrix& X, std::span<const int> y, Penalty penalty, double C,
                         bool balanced, const SolverOptions& options = {},
                         const LinearModel* warm_start = nullptr);

// L2-regularized squared hinge; same solver.
LinearModel fit_linear_svm(const Matrix& X, std::span<const int> y, double C, bool balanced,
                           const SolverOptions& options = {},
                           const LinearModel* warm_start = nullptr);

// Value and gradient of the smooth part of the objective (loss term plus the
// L2 term when penalty is L2). Exposed for gradient checks.
struct ObjectiveEval {
  double value = 0.0;
  Vector grad_w;
  double grad_b = 0.0;
};
ObjectiveEval smooth_objective(const Matrix& X, std::span<const int> y,
                               std::span<const double> sample_weights, Loss loss,
                               Penalty penalty, double C, std::span<const double> w, double b);

// Full objective including the L1 term when penalty is L1.
double full_objective(const Matrix& X, std::span<const int> y,
                      std::span<const double> sample_weights, Loss loss, Penalty penalty,
                      double C, std::span<const double> w, double b);

struct Fold {
  IndexSet train;
  IndexSet val;
};

struct CvPlan {
  enum class Mode : std::uint8_t { stratified_kfold, stratified_shuffle };
  Mode mode = Mode::stratified_kfold;
  std::size_t folds = 5;
  double val_fraction = 0.2;
  std::size_t val_cap = 100;
  std::uint64_t seed = 0;

  static constexpr std::size_t kSmallDatasetLimit = 128;

  // < 128 samples: stratified 5-fold; otherwise one stratified shuffle fold
  // of size min(0.2 N, 100).
  static CvPlan for_size(std::size_t n, std::uint64_t seed);

  // Throws CvInfeasible when a class is too small to appear in every fold.
  std::vector<Fold> split(std::span<const int> y) const;
};

inline constexpr std::size_t kCGridSize = 20;
inline constexpr double kCGridLow = 1e-3;
inline constexpr double kCGridHigh = 1e3;

// 20 log-spaced values over [1e-3, 1e3].
Vector default_c_grid();
Vector log_grid(double low, double high, std::size_t count);

enum class SolverKind : std::uint8_t { logistic_l2, logistic_l1, svm };

struct CSelection {
  double C = 1.0;
  double auc = 0.0;
  Vector mean_auc;  // per grid value
};

// Grid value with the highest mean validation AUC; ties go to the smaller C.
CSelection select_C(const Matrix& X, std::span<const int> y, SolverKind kind,
                    std::span<const double> grid, const CvPlan& plan, bool balanced = true,
                    const SolverOptions& options = {});

LinearModel fit(const Matrix& X, std::span<const int> y, SolverKind kind, double C, bool balanced,
                const SolverOptions& options = {}, const LinearModel* warm_start = nullptr);

struct TaskProbeOptions {
  std::size_t epochs = 500;
  double learning_rate = 1e-2;
  double weight_decay = 1e-4;
};

// Multinomial softmax regression by full-batch gradient descent from zero
// initialization. Labels in [0, classes). Throws SingleClass.
LinearModel fit_task_probe(const Matrix& X, std::span<const int> labels, std::size_t classes,
                           const TaskProbeOptions& options = {});

std::vector<int> predict_classes(const LinearModel& model, const Matrix& X);

// Fraction of argmax-correct predictions (binary models threshold the logit
// at 0). Throws EmptyEval, DimensionMismatch.
double predict_accuracy(const LinearModel& model, const Matrix& X, std::span<const int> labels);

}  // namespace cavkit::probes
