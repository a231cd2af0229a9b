#include "cavkit/cav.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cav_internal.hpp"
#include "cavkit/error.hpp"
#include "cavkit/io.hpp"
#include "cavkit/linalg.hpp"
#include "cavkit/metrics.hpp"
#include "cavkit/rng.hpp"

namespace cavkit::cav {
namespace {

constexpr std::array<std::pair<MethodId, std::string_view>, 18> kNames{{
    {MethodId::diffmean, "diffmean"},
    {MethodId::diffmedian, "diffmedian"},
    {MethodId::svm, "svm"},
    {MethodId::lr, "lr"},
    {MethodId::fastcav, "fastcav"},
    {MethodId::patcav, "patcav"},
    {MethodId::pca, "pca"},
    {MethodId::pospca, "pospca"},
    {MethodId::lat, "lat"},
    {MethodId::aura, "aura"},
    {MethodId::sae_diffmean, "sae_diffmean"},
    {MethodId::sae_diffmedian, "sae_diffmedian"},
    {MethodId::sae_fastcav, "sae_fastcav"},
    {MethodId::sas, "sas"},
    {MethodId::sae_lr, "sae_lr"},
    {MethodId::sp_topk, "sp_topk"},
    {MethodId::sae_aura_dec, "sae_aura_dec"},
    {MethodId::sae_aura_enc, "sae_aura_enc"},
}};

void check_sides(const ConceptDataset& D, const Matrix& M) {
  if (D.positives.empty() || D.negatives.empty()) {
    fail(ErrorCode::EmptySelection, "concept dataset has an empty side");
  }
  check_indices(D.positives, M.rows());
  check_indices(D.negatives, M.rows());
}

Vector subtract(const Vector& a, const Vector& b) {
  Vector out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) out[j] = a[j] - b[j];
  return out;
}

std::string join_indices(const IndexSet& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(s[i]);
  }
  return out;
}

IndexSet split_indices(const std::string& text) {
  IndexSet out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(io::parse_double(item)));
  }
  return out;
}

}  // namespace

std::string_view to_string(MethodId id) {
  for (const auto& [m, name] : kNames) {
    if (m == id) return name;
  }
  return "unknown";
}

std::optional<MethodId> parse_method(std::string_view text) {
  for (const auto& [m, name] : kNames) {
    if (name == text) return m;
  }
  return std::nullopt;
}

const std::vector<MethodId>& all_methods() {
  static const std::vector<MethodId> methods = [] {
    std::vector<MethodId> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
  }();
  return methods;
}

bool uses_sae(MethodId id) { return static_cast<int>(id) >= static_cast<int>(MethodId::sae_diffmean); }

Vector sas_tau_grid() {
  Vector out;
  for (int i = 30; i <= 100; ++i) out.push_back(static_cast<double>(i) / 100.0);
  return out;
}

namespace detail {

std::uint64_t cv_seed(const ConceptDataset& D) { return mix_seed(D.seed, hash_name("cv")); }

Cav make_cav(std::span<const double> raw, MethodId method, const ConceptDataset& D) {
  Cav out;
  out.direction = normalize(raw);
  out.method = method;
  out.concept_name = D.concept_name;
  out.meta.pairing = D.pairing;
  out.meta.n_pos = D.positives.size();
  out.meta.n_neg = D.negatives.size();
  out.meta.seed = D.seed;
  return out;
}

LinearDirection fit_linear_direction(const Matrix& X, std::span<const int> y,
                                     probes::SolverKind kind, const ExtractOptions& options,
                                     std::uint64_t seed) {
  const std::size_t d = X.cols();
  Vector mu(d, 0.0);
  Vector sd(d, 1.0);
  Matrix features = X;
  if (options.standardize) {
    mu = mean_rows(X, all_rows(X.rows()));
    for (std::size_t j = 0; j < d; ++j) {
      double ss = 0.0;
      for (std::size_t i = 0; i < X.rows(); ++i) ss += (X(i, j) - mu[j]) * (X(i, j) - mu[j]);
      sd[j] = std::sqrt(ss / static_cast<double>(X.rows()));
    }
    for (std::size_t i = 0; i < X.rows(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        features(i, j) = sd[j] > kZeroNormTolerance ? (X(i, j) - mu[j]) / sd[j] : 0.0;
      }
    }
  }
  const auto plan = probes::CvPlan::for_size(X.rows(), seed);
  const auto sel = probes::select_C(features, y, kind, options.c_grid, plan, options.balanced,
                                    options.solver);
  const auto model = probes::fit(features, y, kind, sel.C, options.balanced, options.solver);
  LinearDirection out;
  out.C = sel.C;
  auto w = model.coefficients();
  out.weights.assign(w.begin(), w.end());
  if (options.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      out.weights[j] = sd[j] > kZeroNormTolerance ? out.weights[j] / sd[j] : 0.0;
    }
  }
  return out;
}

}  // namespace detail

Cav diff_mean(const ConceptDataset& D, const Matrix& M) {
  check_sides(D, M);
  const Vector raw = subtract(mean_rows(M, D.positives), mean_rows(M, D.negatives));
  return detail::make_cav(raw, MethodId::diffmean, D);
}

Cav diff_median(const ConceptDataset& D, const Matrix& M) {
  check_sides(D, M);
  const Vector raw = subtract(median_rows(M, D.positives), median_rows(M, D.negatives));
  return detail::make_cav(raw, MethodId::diffmedian, D);
}

Cav fast_cav(const ConceptDataset& D, const Matrix& M) {
  check_sides(D, M);
  const IndexSet rows = D.rows();
  const Vector raw = subtract(mean_rows(M, D.positives), mean_rows(M, rows));
  return detail::make_cav(raw, MethodId::fastcav, D);
}

Cav pat_cav(const ConceptDataset& D, const Matrix& M) {
  check_sides(D, M);
  const IndexSet rows = D.rows();
  const auto y = D.labels();
  const double n = static_cast<double>(rows.size());
  const double y_mean = static_cast<double>(D.positives.size()) / n;
  const double y_var = y_mean * (1.0 - y_mean);
  const Vector mu = mean_rows(M, rows);
  Vector raw(M.cols(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double dy = static_cast<double>(y[i]) - y_mean;
    auto h = M.row(rows[i]);
    for (std::size_t j = 0; j < raw.size(); ++j) raw[j] += (h[j] - mu[j]) * dy;
  }
  for (double& v : raw) v = v / n / y_var;
  return detail::make_cav(raw, MethodId::patcav, D);
}

Cav pca_cav(const ConceptDataset& D, const Matrix& M, bool positives_only, bool center) {
  check_sides(D, M);
  const IndexSet rows = positives_only ? D.positives : D.rows();
  const auto pc = first_pc(M, rows, center);
  Cav out = detail::make_cav(pc.direction.values(), positives_only ? MethodId::pospca : MethodId::pca, D);
  out.meta.centered = center;
  if (!pc.converged) out.meta.flags.emplace_back("PowerIterationCap");
  return out;
}

Cav lat_cav(const ConceptDataset& D, const Matrix& M) {
  check_sides(D, M);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (D.pairing == Pairing::counterfactual) {
    if (D.positives.size() != D.negatives.size()) {
      fail(ErrorCode::InvalidArgument, "counterfactual sides differ in size");
    }
    for (std::size_t i = 0; i < D.positives.size(); ++i) pairs.emplace_back(D.positives[i], D.negatives[i]);
  } else {
    IndexSet pos = D.positives;
    IndexSet neg = D.negatives;
    Rng rng(mix_seed(D.seed, hash_name("lat:" + D.concept_name)));
    rng.shuffle(std::span(pos));
    rng.shuffle(std::span(neg));
    const std::size_t count = std::min(pos.size(), neg.size());
    for (std::size_t i = 0; i < count; ++i) pairs.emplace_back(pos[i], neg[i]);
  }

  std::vector<double> deltas;
  std::size_t kept = 0;
  Vector diff(M.cols());
  for (const auto& [p, q] : pairs) {
    auto a = M.row(p);
    auto b = M.row(q);
    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = a[j] - b[j];
    const double n = norm(diff);
    if (n <= kZeroNormTolerance) continue;
    for (double x : diff) deltas.push_back(x / n);
    ++kept;
  }
  if (kept == 0) fail(ErrorCode::AllPairsIdentical, "every pair has zero difference");
  const Matrix delta(kept, M.cols(), std::move(deltas));
  const auto pc = first_pc(delta, all_rows(kept), false);
  Cav out = detail::make_cav(pc.direction.values(), MethodId::lat, D);
  if (kept < pairs.size()) out.meta.flags.emplace_back("DroppedIdenticalPairs");
  if (!pc.converged) out.meta.flags.emplace_back("PowerIterationCap");
  return out;
}

Cav svm_cav(const ConceptDataset& D, const Matrix& M, const ExtractOptions& options) {
  check_sides(D, M);
  const Matrix X = M.select_rows(D.rows());
  const auto y = D.labels();
  const auto fitted = detail::fit_linear_direction(X, y, probes::SolverKind::svm, options,
                                                   detail::cv_seed(D));
  Cav out = detail::make_cav(fitted.weights, MethodId::svm, D);
  out.meta.C = fitted.C;
  out.meta.standardized = options.standardize;
  return out;
}

Cav lr_cav(const ConceptDataset& D, const Matrix& M, const ExtractOptions& options,
           probes::Penalty penalty) {
  check_sides(D, M);
  const Matrix X = M.select_rows(D.rows());
  const auto y = D.labels();
  const auto kind =
      penalty == probes::Penalty::l1 ? probes::SolverKind::logistic_l1 : probes::SolverKind::logistic_l2;
  const auto fitted =
      detail::fit_linear_direction(X, y, kind, options, detail::cv_seed(D));
  Cav out = detail::make_cav(fitted.weights, MethodId::lr, D);
  out.meta.C = fitted.C;
  out.meta.standardized = options.standardize;
  return out;
}

Vector aura_weights(const Matrix& X, std::span<const std::size_t> pos,
                    std::span<const std::size_t> neg) {
  check_indices(pos, X.rows());
  check_indices(neg, X.rows());
  Vector out(X.cols(), 0.0);
  Vector s_pos(pos.size());
  Vector s_neg(neg.size());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    for (std::size_t i = 0; i < pos.size(); ++i) s_pos[i] = X(pos[i], j);
    for (std::size_t i = 0; i < neg.size(); ++i) s_neg[i] = X(neg[i], j);
    const double a = metrics::auc(s_pos, s_neg);
    out[j] = a > 0.5 ? 2.0 * (a - 0.5) : 0.0;
  }
  return out;
}

Cav aura_cav(const ConceptDataset& D, const Matrix& M) {
  check_sides(D, M);
  return detail::make_cav(aura_weights(M, D.positives, D.negatives), MethodId::aura, D);
}

Cav extract(MethodId method, const ConceptDataset& D, const Matrix& M, const sae::SaeParams* sae,
            const ExtractOptions& options) {
  if (uses_sae(method) && sae == nullptr) {
    fail(ErrorCode::InvalidArgument, std::string(to_string(method)) + " needs an SAE");
  }
  switch (method) {
    case MethodId::diffmean: return diff_mean(D, M);
    case MethodId::diffmedian: return diff_median(D, M);
    case MethodId::svm: return svm_cav(D, M, options);
    case MethodId::lr: return lr_cav(D, M, options);
    case MethodId::fastcav: return fast_cav(D, M);
    case MethodId::patcav: return pat_cav(D, M);
    case MethodId::pca: return pca_cav(D, M, false, options.center_pca);
    case MethodId::pospca: return pca_cav(D, M, true, options.center_pca);
    case MethodId::lat: return lat_cav(D, M);
    case MethodId::aura: return aura_cav(D, M);
    case MethodId::sae_diffmean: return sae_aggregate_cav(D, M, *sae, Aggregator::mean);
    case MethodId::sae_diffmedian: return sae_aggregate_cav(D, M, *sae, Aggregator::median);
    case MethodId::sae_fastcav: return sae_aggregate_cav(D, M, *sae, Aggregator::fastcav);
    case MethodId::sas: return sas_cav(D, M, *sae);
    case MethodId::sae_lr: return sae_lr_cav(D, M, *sae, options);
    case MethodId::sp_topk: return sp_topk_cav(D, M, *sae, options);
    case MethodId::sae_aura_dec: return sae_aura_cav(D, M, *sae, AuraVariant::decoder);
    case MethodId::sae_aura_enc: return sae_aura_cav(D, M, *sae, AuraVariant::encoder_transpose);
  }
  fail(ErrorCode::InvalidArgument, "unknown method");
}

void save_cav(const Cav& cav, const std::filesystem::path& stem) {
  auto with_ext = [&](const char* ext) {
    auto p = stem;
    p += ext;
    return p;
  };
  io::save_matrix(io::row_vector(cav.direction.values()), with_ext(".cavb"));
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  std::string flags;
  for (const auto& f : cav.meta.flags) flags += (flags.empty() ? "" : ",") + f;
  io::write_key_values(
      {{"method", std::string(to_string(cav.method))},
       {"concept", cav.concept_name},
       {"C", opt(cav.meta.C)},
       {"tau", opt(cav.meta.tau)},
       {"S", cav.meta.S ? join_indices(*cav.meta.S) : std::string()},
       {"seed", std::to_string(cav.meta.seed)},
       {"C_stage1", opt(cav.meta.C_stage1)},
       {"pairing", cav.meta.pairing == Pairing::counterfactual ? "counterfactual" : "unpaired"},
       {"n_pos", std::to_string(cav.meta.n_pos)},
       {"n_neg", std::to_string(cav.meta.n_neg)},
       {"standardized", cav.meta.standardized ? "1" : "0"},
       {"centered", cav.meta.centered ? "1" : "0"},
       {"flags", flags}},
      with_ext(".meta"));
}

Cav load_cav(const std::filesystem::path& stem) {
  auto with_ext = [&](const char* ext) {
    auto p = stem;
    p += ext;
    return p;
  };
  const Matrix m = io::load_matrix(with_ext(".cavb"));
  if (m.rows() != 1) fail(ErrorCode::InvalidArgument, "CAV file must hold a 1 x d matrix");
  Cav out;
  // stored as f32, so renormalize in double precision
  out.direction = normalize(m.row(0));
  const auto kv = io::read_key_values(with_ext(".meta"));
  auto get = [&](std::string_view key) -> std::string {
    const std::string* v = io::find_value(kv, key);
    return v ? *v : std::string();
  };
  auto opt = [&](std::string_view key) -> std::optional<double> {
    const std::string v = get(key);
    if (v.empty()) return std::nullopt;
    return io::parse_double(v);
  };
  const auto method = parse_method(get("method"));
  if (!method) fail(ErrorCode::ParseError, "unknown method in CAV meta: " + get("method"));
  out.method = *method;
  out.concept_name = get("concept");
  out.meta.C = opt("C");
  out.meta.tau = opt("tau");
  out.meta.C_stage1 = opt("C_stage1");
  if (!get("S").empty() || out.method == MethodId::sas || out.method == MethodId::sp_topk) {
    out.meta.S = split_indices(get("S"));
  }
  if (const auto seed = get("seed"); !seed.empty()) out.meta.seed = std::stoull(seed);
  out.meta.pairing = get("pairing") == "counterfactual" ? Pairing::counterfactual : Pairing::unpaired;
  if (const auto n = get("n_pos"); !n.empty()) out.meta.n_pos = std::stoull(n);
  if (const auto n = get("n_neg"); !n.empty()) out.meta.n_neg = std::stoull(n);
  out.meta.standardized = get("standardized") == "1";
  out.meta.centered = get("centered") == "1";
  std::stringstream flags(get("flags"));
  std::string f;
  while (std::getline(flags, f, ',')) {
    if (!f.empty()) out.meta.flags.push_back(f);
  }
  return out;
}

}  // namespace cavkit::cav
