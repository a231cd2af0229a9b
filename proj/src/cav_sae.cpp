#include <algorithm>
#include <cmath>

#include "cav_internal.hpp"
#include "cavkit/cav.hpp"
#include "cavkit/error.hpp"
#include "cavkit/linalg.hpp"
#include "cavkit/metrics.hpp"
#include "cavkit/rng.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit::cav {
namespace {

// Latent codes of D's rows; positives occupy [0, n_pos), negatives follow.
struct LatentView {
  Matrix z;
  IndexSet pos;
  IndexSet neg;
  std::vector<int> labels;
};

LatentView encode_dataset(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae) {
  if (D.positives.empty() || D.negatives.empty()) {
    fail(ErrorCode::EmptySelection, "concept dataset has an empty side");
  }
  if (M.cols() != sae.input_dim()) fail(ErrorCode::DimensionMismatch, "store width != SAE d");
  check_indices(D.positives, M.rows());
  check_indices(D.negatives, M.rows());
  LatentView out;
  const IndexSet rows = D.rows();
  Matrix h = M.select_rows(rows);
  if (sae.scale != 1.0) h = h.scaled(sae.scale);
  out.z = sae::encode_matrix(sae, h);
  for (std::size_t i = 0; i < D.positives.size(); ++i) out.pos.push_back(i);
  for (std::size_t i = D.positives.size(); i < rows.size(); ++i) out.neg.push_back(i);
  out.labels = D.labels();
  return out;
}

// W_dec w
Vector decode_direction(const sae::SaeParams& sae, std::span<const double> w) {
  return sae::decode(sae, w);
}

// W_enc^T w
Vector encoder_transpose(const sae::SaeParams& sae, std::span<const double> w) {
  return sae.W_enc.multiply_transposed(w);
}

bool all_zero(std::span<const double> w) {
  return std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; });
}

// z-space DiffMean restricted to `keep` (zero elsewhere).
Vector restricted_diff_mean(const Matrix& z, const IndexSet& pos, const IndexSet& neg,
                            const IndexSet& keep) {
  const Vector mp = mean_rows(z, pos);
  const Vector mn = mean_rows(z, neg);
  Vector w(z.cols(), 0.0);
  for (std::size_t j : keep) w[j] = mp[j] - mn[j];
  return w;
}

IndexSet survivors(const Vector& dens_pos, const Vector& dens_neg, double tau) {
  IndexSet out;
  for (std::size_t j = 0; j < dens_pos.size(); ++j) {
    if (dens_pos[j] >= tau && !(dens_neg[j] >= tau)) out.push_back(j);
  }
  return out;
}

}  // namespace

Cav sae_aggregate_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
                      Aggregator aggregator) {
  const LatentView v = encode_dataset(D, M, sae);
  Vector a;
  Vector b;
  MethodId id = MethodId::sae_diffmean;
  switch (aggregator) {
    case Aggregator::mean:
      a = mean_rows(v.z, v.pos);
      b = mean_rows(v.z, v.neg);
      break;
    case Aggregator::median:
      a = median_rows(v.z, v.pos);
      b = median_rows(v.z, v.neg);
      id = MethodId::sae_diffmedian;
      break;
    case Aggregator::fastcav:
      a = mean_rows(v.z, v.pos);
      b = mean_rows(v.z, all_rows(v.z.rows()));
      id = MethodId::sae_fastcav;
      break;
  }
  Vector w(a.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = a[j] - b[j];
  if (all_zero(w)) fail(ErrorCode::ZeroNorm, "latent direction is zero");
  return detail::make_cav(decode_direction(sae, w), id, D);
}

Cav sas_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae) {
  const LatentView v = encode_dataset(D, M, sae);
  const Vector taus = sas_tau_grid();

  // Projections are compared in the scaled store; AUC does not see the scale.
  Matrix h = M.select_rows(D.rows());
  if (sae.scale != 1.0) h = h.scaled(sae.scale);

  probes::CvPlan plan;
  plan.mode = probes::CvPlan::Mode::stratified_kfold;
  plan.folds = 5;
  plan.seed = mix_seed(D.seed, hash_name("sas"));
  const auto folds = plan.split(v.labels);

  Vector score(taus.size(), 0.0);
  for (const auto& fold : folds) {
    IndexSet tr_pos;
    IndexSet tr_neg;
    IndexSet va_pos;
    IndexSet va_neg;
    for (std::size_t i : fold.train) (v.labels[i] ? tr_pos : tr_neg).push_back(i);
    for (std::size_t i : fold.val) (v.labels[i] ? va_pos : va_neg).push_back(i);
    const Vector dp = sae::activation_density(v.z, tr_pos);
    const Vector dn = sae::activation_density(v.z, tr_neg);
    for (std::size_t t = 0; t < taus.size(); ++t) {
      const IndexSet keep = survivors(dp, dn, taus[t]);
      double fold_auc = 0.5;
      if (!keep.empty()) {
        const Vector w = restricted_diff_mean(v.z, tr_pos, tr_neg, keep);
        const Vector dir = decode_direction(sae, w);
        if (norm(dir) > kZeroNormTolerance) {
          fold_auc = metrics::auc(metrics::project(h, va_pos, va_neg, dir));
        }
      }
      score[t] += fold_auc / static_cast<double>(folds.size());
    }
  }

  const Vector dp = sae::activation_density(v.z, v.pos);
  const Vector dn = sae::activation_density(v.z, v.neg);
  std::optional<std::size_t> best;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    if (survivors(dp, dn, taus[t]).empty()) continue;
    if (!best || score[t] >= score[*best]) best = t;  // ascending taus: ties go to the larger
  }
  if (!best) fail(ErrorCode::NoSurvivingNeurons, "no latent survives density filtering");

  const IndexSet keep = survivors(dp, dn, taus[*best]);
  const Vector w = restricted_diff_mean(v.z, v.pos, v.neg, keep);
  Cav out = detail::make_cav(decode_direction(sae, w), MethodId::sas, D);
  out.meta.tau = taus[*best];
  out.meta.S = keep;
  return out;
}

Cav sae_lr_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
               const ExtractOptions& options) {
  const LatentView v = encode_dataset(D, M, sae);
  const auto fitted = detail::fit_linear_direction(v.z, v.labels, probes::SolverKind::logistic_l1,
                                                   options, detail::cv_seed(D));
  if (all_zero(fitted.weights)) fail(ErrorCode::ZeroNorm, "every L1 coefficient vanished");
  Cav out = detail::make_cav(decode_direction(sae, fitted.weights), MethodId::sae_lr, D);
  out.meta.C = fitted.C;
  out.meta.standardized = options.standardize;
  return out;
}

Cav sp_topk_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
                const ExtractOptions& options) {
  if (options.sp_topk_k == 0) fail(ErrorCode::InvalidArgument, "K must be >= 1");
  const LatentView v = encode_dataset(D, M, sae);
  const auto stage1 = detail::fit_linear_direction(
      v.z, v.labels, probes::SolverKind::logistic_l1, options, detail::cv_seed(D));

  IndexSet nonzero;
  for (std::size_t j = 0; j < stage1.weights.size(); ++j) {
    if (stage1.weights[j] != 0.0) nonzero.push_back(j);
  }
  if (nonzero.empty()) fail(ErrorCode::FewerThanKActive, "stage-1 selection kept no latent");
  const bool short_of_k = nonzero.size() < options.sp_topk_k;
  if (!short_of_k) {
    std::partial_sort(nonzero.begin(), nonzero.begin() + static_cast<long>(options.sp_topk_k),
                      nonzero.end(), [&](std::size_t a, std::size_t b) {
                        const double wa = std::abs(stage1.weights[a]);
                        const double wb = std::abs(stage1.weights[b]);
                        return wa > wb || (wa == wb && a < b);
                      });
    nonzero.resize(options.sp_topk_k);
  }
  std::sort(nonzero.begin(), nonzero.end());
  const IndexSet& S = nonzero;

  const Matrix zs = v.z.select_cols(S);
  const auto stage2 = detail::fit_linear_direction(
      zs, v.labels, probes::SolverKind::logistic_l2, options, detail::cv_seed(D));

  Vector raw(sae.input_dim(), 0.0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    simd::axpy(stage2.weights[i], sae.W_enc.row(S[i]), raw);
  }
  Cav out = detail::make_cav(raw, MethodId::sp_topk, D);
  out.meta.C = stage2.C;
  out.meta.C_stage1 = stage1.C;
  out.meta.S = S;
  out.meta.standardized = options.standardize;
  if (short_of_k) out.meta.flags.emplace_back("FewerThanKActive");
  return out;
}

Cav sae_aura_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
                 AuraVariant variant) {
  const LatentView v = encode_dataset(D, M, sae);
  const Vector w = aura_weights(v.z, v.pos, v.neg);
  if (all_zero(w)) fail(ErrorCode::ZeroNorm, "no latent has AUC above 0.5");
  if (variant == AuraVariant::decoder) {
    return detail::make_cav(decode_direction(sae, w), MethodId::sae_aura_dec, D);
  }
  return detail::make_cav(encoder_transpose(sae, w), MethodId::sae_aura_enc, D);
}

}  // namespace cavkit::cav
