#include "cavkit/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cavkit/error.hpp"
#include "cavkit/linalg.hpp"
#include "cavkit/metrics.hpp"
#include "cavkit/rng.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit::probes {
namespace {

void check_binary(const Matrix& X, std::span<const int> y) {
  if (X.rows() != y.size()) fail(ErrorCode::DimensionMismatch, "X rows and labels differ");
  if (X.rows() == 0 || X.cols() == 0) fail(ErrorCode::InvalidArgument, "empty training matrix");
  bool has_pos = false;
  bool has_neg = false;
  for (int v : y) {
    if (v == 1) {
      has_pos = true;
    } else if (v == 0) {
      has_neg = true;
    } else {
      fail(ErrorCode::InvalidArgument, "binary labels must be 0/1");
    }
  }
  if (!has_pos || !has_neg) fail(ErrorCode::SingleClass, "training labels contain one class");
}

double loss_value(Loss loss, double margin) {
  if (loss == Loss::logistic) {
    return margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
  }
  const double u = std::max(0.0, 1.0 - margin);
  return u * u;
}

// d loss / d margin
double loss_slope(Loss loss, double margin) {
  if (loss == Loss::logistic) {
    if (margin >= 0.0) {
      const double e = std::exp(-margin);
      return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(margin));
  }
  return -2.0 * std::max(0.0, 1.0 - margin);
}

double l1_norm(std::span<const double> w) {
  double s = 0.0;
  for (double x : w) s += std::abs(x);
  return s;
}

double smooth_value(const Matrix& X, std::span<const int> y, std::span<const double> s, Loss loss,
                    Penalty penalty, double C, std::span<const double> w, double b,
                    Vector& scratch) {
  scratch.resize(X.rows());
  simd::active().gemv(X.values().data(), X.rows(), X.cols(), w.data(), scratch.data());
  double total = 0.0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double sign = y[i] == 1 ? 1.0 : -1.0;
    total += s[i] * loss_value(loss, sign * (scratch[i] + b));
  }
  double value = C * total;
  if (penalty == Penalty::l2) value += 0.5 * simd::dot(w, w);
  return value;
}

LinearModel solve_binary(const Matrix& X, std::span<const int> y, Loss loss, Penalty penalty,
                         double C, bool balanced, const SolverOptions& options,
                         const LinearModel* warm_start) {
  check_binary(X, y);
  if (!(C > 0.0) || !std::isfinite(C)) fail(ErrorCode::InvalidArgument, "C must be positive");
  const std::size_t d = X.cols();
  const std::vector<double> s = balanced ? balanced_sample_weights(y) : std::vector<double>(y.size(), 1.0);

  Vector w(d, 0.0);
  double b = 0.0;
  if (warm_start != nullptr && warm_start->input_dim() == d && !warm_start->intercepts.empty()) {
    auto row = warm_start->coefficients();
    w.assign(row.begin(), row.end());
    b = warm_start->intercepts[0];
  }

  Vector scratch;
  auto total = [&](std::span<const double> ww, double bb) {
    double v = smooth_value(X, y, s, loss, penalty, C, ww, bb, scratch);
    if (penalty == Penalty::l1) v += l1_norm(ww);
    return v;
  };

  double lipschitz = 1.0;
  Vector w_new(d);
  double b_new = 0.0;

  // One proximal gradient step from (yw, yb) with backtracking on the
  // Lipschitz estimate. Returns the full objective at the new point.
  auto prox_step = [&](const Vector& yw, double yb) {
    const ObjectiveEval ev = smooth_objective(X, y, s, loss, penalty, C, yw, yb);
    for (;;) {
      const double step = 1.0 / lipschitz;
      for (std::size_t j = 0; j < d; ++j) {
        double v = yw[j] - step * ev.grad_w[j];
        if (penalty == Penalty::l1) v = std::copysign(std::max(0.0, std::abs(v) - step), v);
        w_new[j] = v;
      }
      b_new = yb - step * ev.grad_b;
      const double f_new = smooth_value(X, y, s, loss, penalty, C, w_new, b_new, scratch);
      if (!std::isfinite(f_new)) fail(ErrorCode::NonFiniteLoss, "objective is not finite");
      double lin = ev.grad_b * (b_new - yb);
      double sq = (b_new - yb) * (b_new - yb);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = w_new[j] - yw[j];
        lin += ev.grad_w[j] * diff;
        sq += diff * diff;
      }
      const double bound = ev.value + lin + 0.5 * lipschitz * sq;
      if (f_new <= bound + 1e-12 * std::abs(bound) || lipschitz > 1e300) {
        return f_new + (penalty == Penalty::l1 ? l1_norm(w_new) : 0.0);
      }
      lipschitz *= 2.0;
    }
  };

  double f_x = total(w, b);
  if (!std::isfinite(f_x)) fail(ErrorCode::NonFiniteLoss, "initial objective is not finite");
  Vector yw = w;
  double yb = b;
  double t = 1.0;
  LinearModel model;
  std::size_t it = 0;
  for (; it < options.max_iterations; ++it) {
    double f_new = prox_step(yw, yb);
    if (f_new > f_x) {
      // momentum overshot: restart from the current iterate
      t = 1.0;
      f_new = prox_step(w, b);
    }
    const double decrease = f_x - f_new;
    const double scale = std::max({std::abs(f_x), std::abs(f_new), 1e-300});
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double momentum = (t - 1.0) / t_next;
    for (std::size_t j = 0; j < d; ++j) yw[j] = w_new[j] + momentum * (w_new[j] - w[j]);
    yb = b_new + momentum * (b_new - b);
    w.swap(w_new);
    b = b_new;
    f_x = f_new;
    t = t_next;
    lipschitz = std::max(1e-12, 0.9 * lipschitz);
    if (decrease / scale < options.tolerance) {
      model.converged = true;
      ++it;
      break;
    }
  }

  model.weights = Matrix(1, d, std::move(w));
  model.intercepts = {b};
  model.penalty = penalty;
  model.C = C;
  model.loss = loss;
  model.iterations = it;
  return model;
}

}  // namespace

double LinearModel::decision(std::span<const double> x) const {
  if (x.size() != input_dim()) fail(ErrorCode::DimensionMismatch, "model/input dimension mismatch");
  return simd::dot(coefficients(), x) + intercepts[0];
}

Vector LinearModel::decisions(const Matrix& X) const {
  if (X.cols() != input_dim()) fail(ErrorCode::DimensionMismatch, "model/input dimension mismatch");
  Vector out = weights.rows() == 1 ? Vector(X.rows()) : Vector{};
  if (weights.rows() != 1) fail(ErrorCode::InvalidArgument, "decisions() needs a binary model");
  simd::active().gemv(X.values().data(), X.rows(), X.cols(), weights.values().data(), out.data());
  for (double& v : out) v += intercepts[0];
  return out;
}

int LinearModel::predict(std::span<const double> x) const {
  if (x.size() != input_dim()) fail(ErrorCode::DimensionMismatch, "model/input dimension mismatch");
  if (loss != Loss::softmax) return decision(x) > 0.0 ? 1 : 0;
  int best = 0;
  double best_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < weights.rows(); ++k) {
    const double logit = simd::dot(weights.row(k), x) + intercepts[k];
    if (logit > best_logit) {
      best_logit = logit;
      best = static_cast<int>(k);
    }
  }
  return best;
}

std::vector<double> balanced_sample_weights(std::span<const int> y) {
  std::size_t pos = 0;
  for (int v : y) pos += v == 1 ? 1 : 0;
  const std::size_t neg = y.size() - pos;
  const double largest = static_cast<double>(std::max(pos, neg));
  const double w_pos = pos > 0 ? largest / static_cast<double>(pos) : 0.0;
  const double w_neg = neg > 0 ? largest / static_cast<double>(neg) : 0.0;
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] == 1 ? w_pos : w_neg;
  return out;
}

ObjectiveEval smooth_objective(const Matrix& X, std::span<const int> y,
                               std::span<const double> sample_weights, Loss loss,
                               Penalty penalty, double C, std::span<const double> w, double b) {
  if (w.size() != X.cols() || y.size() != X.rows() || sample_weights.size() != X.rows()) {
    fail(ErrorCode::DimensionMismatch, "objective inputs disagree in size");
  }
  const std::size_t n = X.rows();
  Vector scores(n);
  simd::active().gemv(X.values().data(), n, X.cols(), w.data(), scores.data());
  Vector residual(n);
  double total = 0.0;
  double grad_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = y[i] == 1 ? 1.0 : -1.0;
    const double margin = sign * (scores[i] + b);
    total += sample_weights[i] * loss_value(loss, margin);
    residual[i] = C * sample_weights[i] * loss_slope(loss, margin) * sign;
    grad_b += residual[i];
  }
  ObjectiveEval out;
  out.value = C * total;
  out.grad_w.assign(X.cols(), 0.0);
  simd::active().gemv_t_acc(X.values().data(), n, X.cols(), residual.data(), out.grad_w.data());
  out.grad_b = grad_b;
  if (penalty == Penalty::l2) {
    out.value += 0.5 * simd::dot(w, w);
    simd::axpy(1.0, w, out.grad_w);
  }
  return out;
}

double full_objective(const Matrix& X, std::span<const int> y,
                      std::span<const double> sample_weights, Loss loss, Penalty penalty,
                      double C, std::span<const double> w, double b) {
  double v = smooth_objective(X, y, sample_weights, loss, penalty, C, w, b).value;
  if (penalty == Penalty::l1) v += l1_norm(w);
  return v;
}

LinearModel fit_logistic(const Matrix& X, std::span<const int> y, Penalty penalty, double C,
                         bool balanced, const SolverOptions& options,
                         const LinearModel* warm_start) {
  return solve_binary(X, y, Loss::logistic, penalty, C, balanced, options, warm_start);
}

LinearModel fit_linear_svm(const Matrix& X, std::span<const int> y, double C, bool balanced,
                           const SolverOptions& options, const LinearModel* warm_start) {
  return solve_binary(X, y, Loss::squared_hinge, Penalty::l2, C, balanced, options, warm_start);
}

LinearModel fit(const Matrix& X, std::span<const int> y, SolverKind kind, double C, bool balanced,
                const SolverOptions& options, const LinearModel* warm_start) {
  switch (kind) {
    case SolverKind::logistic_l2:
      return fit_logistic(X, y, Penalty::l2, C, balanced, options, warm_start);
    case SolverKind::logistic_l1:
      return fit_logistic(X, y, Penalty::l1, C, balanced, options, warm_start);
    case SolverKind::svm:
      return fit_linear_svm(X, y, C, balanced, options, warm_start);
  }
  fail(ErrorCode::InvalidArgument, "unknown solver kind");
}

CvPlan CvPlan::for_size(std::size_t n, std::uint64_t seed) {
  CvPlan plan;
  plan.seed = seed;
  if (n < kSmallDatasetLimit) {
    plan.mode = Mode::stratified_kfold;
    plan.folds = 5;
  } else {
    plan.mode = Mode::stratified_shuffle;
    plan.val_fraction = 0.2;
    plan.val_cap = 100;
  }
  return plan;
}

std::vector<Fold> CvPlan::split(std::span<const int> y) const {
  IndexSet by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i] == 1 ? 1 : 0].push_back(i);
  const std::size_t smallest = std::min(by_class[0].size(), by_class[1].size());
  Rng rng(mix_seed(seed, 0xCF));
  for (auto& cls : by_class) rng.shuffle(std::span(cls));

  std::vector<Fold> out;
  if (mode == Mode::stratified_kfold) {
    if (folds < 2) fail(ErrorCode::InvalidArgument, "k-fold CV needs K >= 2");
    const std::size_t k = std::min(folds, smallest);
    if (k < 2) fail(ErrorCode::CvInfeasible, "a class has fewer than 2 samples");
    out.resize(k);
    for (const auto& cls : by_class) {
      for (std::size_t i = 0; i < cls.size(); ++i) out[i % k].val.push_back(cls[i]);
    }
  } else {
    if (smallest < 2) fail(ErrorCode::CvInfeasible, "a class has fewer than 2 samples");
    const std::size_t n = y.size();
    const std::size_t target = std::min(
        static_cast<std::size_t>(std::floor(val_fraction * static_cast<double>(n))), val_cap);
    out.resize(1);
    for (const auto& cls : by_class) {
      const double share = static_cast<double>(target) * static_cast<double>(cls.size()) /
                           static_cast<double>(n);
      const std::size_t take =
          std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(share)), 1, cls.size() - 1);
      out[0].val.insert(out[0].val.end(), cls.begin(), cls.begin() + static_cast<long>(take));
    }
  }
  for (auto& fold : out) {
    std::sort(fold.val.begin(), fold.val.end());
    std::vector<bool> in_val(y.size(), false);
    for (std::size_t i : fold.val) in_val[i] = true;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!in_val[i]) fold.train.push_back(i);
    }
  }
  return out;
}

Vector log_grid(double low, double high, std::size_t count) {
  if (count == 0 || !(low > 0.0) || !(high >= low)) {
    fail(ErrorCode::InvalidArgument, "bad log grid bounds");
  }
  Vector out(count);
  if (count == 1) {
    out[0] = low;
    return out;
  }
  const double a = std::log10(low);
  const double b = std::log10(high);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.front() = low;
  out.back() = high;
  return out;
}

Vector default_c_grid() { return log_grid(kCGridLow, kCGridHigh, kCGridSize); }

CSelection select_C(const Matrix& X, std::span<const int> y, SolverKind kind,
                    std::span<const double> grid, const CvPlan& plan, bool balanced,
                    const SolverOptions& options) {
  if (grid.empty()) fail(ErrorCode::InvalidArgument, "C grid is empty");
  check_binary(X, y);
  const auto folds = plan.split(y);
  CSelection out;
  out.mean_auc.assign(grid.size(), 0.0);
  for (const auto& fold : folds) {
    const Matrix X_train = X.select_rows(fold.train);
    const Matrix X_val = X.select_rows(fold.val);
    std::vector<int> y_train;
    std::vector<int> y_val;
    for (std::size_t i : fold.train) y_train.push_back(y[i]);
    for (std::size_t i : fold.val) y_val.push_back(y[i]);
    IndexSet pos;
    IndexSet neg;
    for (std::size_t i = 0; i < y_val.size(); ++i) (y_val[i] ? pos : neg).push_back(i);

    // Grid values are fitted in ascending order, each warm-started from the last.
    IndexSet order = all_rows(grid.size());
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
    LinearModel previous;
    bool have_previous = false;
    for (std::size_t g : order) {
      LinearModel model = fit(X_train, y_train, kind, grid[g], balanced, options,
                              have_previous ? &previous : nullptr);
      const Vector scores = model.decisions(X_val);
      Vector s_pos;
      Vector s_neg;
      for (std::size_t i : pos) s_pos.push_back(scores[i]);
      for (std::size_t i : neg) s_neg.push_back(scores[i]);
      out.mean_auc[g] += metrics::auc(s_pos, s_neg) / static_cast<double>(folds.size());
      previous = std::move(model);
      have_previous = true;
    }
  }
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const bool better = out.mean_auc[g] > out.mean_auc[best];
    const bool tie_smaller = out.mean_auc[g] == out.mean_auc[best] && grid[g] < grid[best];
    if (better || tie_smaller) best = g;
  }
  out.C = grid[best];
  out.auc = out.mean_auc[best];
  return out;
}

LinearModel fit_task_probe(const Matrix& X, std::span<const int> labels, std::size_t classes,
                           const TaskProbeOptions& options) {
  if (X.rows() != labels.size()) fail(ErrorCode::DimensionMismatch, "X rows and labels differ");
  if (X.rows() == 0) fail(ErrorCode::EmptyEval, "no training rows for the task probe");
  if (classes < 2) fail(ErrorCode::SingleClass, "task probe needs >= 2 classes");
  std::vector<bool> seen(classes, false);
  for (int v : labels) {
    if (v < 0 || static_cast<std::size_t>(v) >= classes) {
      fail(ErrorCode::InvalidArgument, "task label out of range");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
  if (std::count(seen.begin(), seen.end(), true) < 2) {
    fail(ErrorCode::SingleClass, "task labels contain one class");
  }

  const std::size_t n = X.rows();
  const std::size_t d = X.cols();
  const std::size_t k = classes;
  const auto& kern = simd::active();
  Matrix W(k, d);
  Vector b(k, 0.0);
  Matrix grad(k, d);
  Vector grad_b(k);
  Vector logits(k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    std::fill(grad.values().begin(), grad.values().end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto x = X.row(i);
      kern.gemv(W.values().data(), k, d, x.data(), logits.data());
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        logits[c] += b[c];
        top = std::max(top, logits[c]);
      }
      double z = 0.0;
      for (double& l : logits) {
        l = std::exp(l - top);
        z += l;
      }
      for (std::size_t c = 0; c < k; ++c) {
        const double coef = (logits[c] / z - (labels[i] == static_cast<int>(c) ? 1.0 : 0.0)) * inv_n;
        kern.axpy(coef, x.data(), grad.row(c).data(), d);
        grad_b[c] += coef;
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      auto wr = W.row(c);
      auto gr = grad.row(c);
      for (std::size_t j = 0; j < d; ++j) {
        wr[j] -= options.learning_rate * (gr[j] + options.weight_decay * wr[j]);
      }
      b[c] -= options.learning_rate * grad_b[c];
    }
  }
  LinearModel model;
  model.weights = std::move(W);
  model.intercepts = std::move(b);
  model.penalty = Penalty::l2;
  model.C = 1.0 / options.weight_decay;
  model.loss = Loss::softmax;
  model.iterations = options.epochs;
  model.converged = true;
  return model;
}

std::vector<int> predict_classes(const LinearModel& model, const Matrix& X) {
  if (X.cols() != model.input_dim()) {
    fail(ErrorCode::DimensionMismatch, "model/input dimension mismatch");
  }
  std::vector<int> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out[i] = model.predict(X.row(i));
  return out;
}

double predict_accuracy(const LinearModel& model, const Matrix& X, std::span<const int> labels) {
  if (X.rows() == 0) fail(ErrorCode::EmptyEval, "evaluation set is empty");
  if (X.rows() != labels.size()) fail(ErrorCode::DimensionMismatch, "X rows and labels differ");
  const auto predicted = predict_classes(model, X);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace cavkit::probes
