#include "cavkit/synthetic.hpp"

#include <cmath>

#include "cavkit/error.hpp"
#include "cavkit/linalg.hpp"
#include "cavkit/rng.hpp"
#include "cavkit/simd/kernels.hpp"

namespace cavkit {
namespace {

void project_out(std::span<double> x, const std::vector<Vector>& basis) {
  // two passes of modified Gram-Schmidt keep the residual at rounding level
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& q : basis) simd::axpy(-simd::dot(q, x), q, x);
  }
}

std::vector<Vector> orthonormal_basis(const std::vector<Vector>& dirs) {
  std::vector<Vector> basis;
  for (const auto& v : dirs) {
    Vector q = v;
    project_out(q, basis);
    const double n = norm(q);
    if (n > 1e-9) {
      for (double& x : q) x /= n;
      basis.push_back(std::move(q));
    }
  }
  return basis;
}

Vector gaussian(Rng& rng, std::size_t d, double sigma) {
  Vector out(d);
  for (double& x : out) x = sigma * rng.normal();
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (d == 0) fail(ErrorCode::InvalidArgument, "synthetic d must be >= 1");
  if (n_per_side == 0) fail(ErrorCode::InvalidArgument, "synthetic n_per_side must be >= 1");
  if (!(beta > 0.0)) fail(ErrorCode::InvalidArgument, "synthetic beta must be > 0");
  if (!(noise_sigma >= 0.0) || !(base_sigma >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "synthetic sigmas must be >= 0");
  }
  if (concept_dirs.empty()) fail(ErrorCode::InvalidArgument, "synthetic spec has no concepts");
  if (concept_names.size() != concept_dirs.size()) {
    fail(ErrorCode::InvalidArgument, "concept_names and concept_dirs differ in length");
  }
  for (const auto& v : concept_dirs) {
    if (v.size() != d) fail(ErrorCode::DimensionMismatch, "concept direction has wrong length");
    if (std::abs(norm(v) - 1.0) > UnitVector::kNormTolerance) {
      fail(ErrorCode::InvalidArgument, "concept direction is not unit norm");
    }
  }
  if (task_dir.size() != d || std::abs(norm(task_dir) - 1.0) > UnitVector::kNormTolerance) {
    fail(ErrorCode::InvalidArgument, "task_dir must be a unit vector of length d");
  }
  double total = 0.0;
  for (double f : split_fractions) {
    if (f < 0.0) fail(ErrorCode::InvalidArgument, "split fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "split fractions must sum to 1");
}

void plant_random_directions(SyntheticSpec& spec, std::size_t count, double pairwise_cosine) {
  if (count == 0) fail(ErrorCode::InvalidArgument, "need at least one concept");
  if (spec.d < count + 2) fail(ErrorCode::InvalidArgument, "d must be >= concept count + 2");
  if (!(pairwise_cosine >= 0.0 && pairwise_cosine < 1.0)) {
    fail(ErrorCode::InvalidArgument, "pairwise cosine must be in [0, 1)");
  }
  Rng rng(mix_seed(spec.seed, 0xD1));
  std::vector<Vector> raw;
  for (std::size_t i = 0; i < count + 2; ++i) raw.push_back(gaussian(rng, spec.d, 1.0));
  const auto basis = orthonormal_basis(raw);
  if (basis.size() != count + 2) fail(ErrorCode::InvalidArgument, "degenerate random basis");

  const double shared = std::sqrt(pairwise_cosine);
  const double own = std::sqrt(1.0 - pairwise_cosine);
  spec.concept_dirs.clear();
  spec.concept_names.clear();
  for (std::size_t c = 0; c < count; ++c) {
    Vector v(spec.d);
    for (std::size_t j = 0; j < spec.d; ++j) v[j] = shared * basis[0][j] + own * basis[c + 1][j];
    spec.concept_dirs.push_back(normalize(v).vector());
    spec.concept_names.push_back("concept_" + std::to_string(c));
  }
  spec.task_dir = basis[count + 1];
}

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d = spec.d;
  const std::size_t k = spec.concept_dirs.size();
  const std::size_t n = spec.n_per_side;
  const auto concept_basis = orthonormal_basis(spec.concept_dirs);

  SyntheticData out;
  out.embeddings = Matrix(2 * n * k, d);
  LabelTable& labels = out.labels;
  labels.concept_names = spec.concept_names;
  for (const auto& name : spec.concept_names) labels.concepts[name].assign(2 * n * k, 0);
  labels.sample_ids.reserve(2 * n * k);
  labels.pair_ids.reserve(2 * n * k);

  const std::size_t n_train = static_cast<std::size_t>(std::llround(spec.split_fractions[0] * n));
  const std::size_t n_val = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(spec.split_fractions[1] * n)));

  Rng rng(mix_seed(spec.seed, 0x5EED));
  std::size_t row = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const auto& name = spec.concept_names[c];
    const auto& v = spec.concept_dirs[c];

    std::vector<Split> pair_split(n, Split::test);
    IndexSet order = all_rows(n);
    rng.shuffle(std::span(order));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train) {
        pair_split[order[i]] = Split::train;
      } else if (i < n_train + n_val) {
        pair_split[order[i]] = Split::val;
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      Vector clean = gaussian(rng, d, spec.base_sigma);
      if (spec.noise_sigma > 0.0) {
        Vector noise = gaussian(rng, d, spec.noise_sigma);
        simd::axpy(1.0, noise, clean);
      }
      if (spec.base_orthogonal) project_out(clean, concept_basis);
      Vector infused = clean;
      simd::axpy(spec.beta, v, infused);
      if (spec.noise_sigma > 0.0) {
        Vector noise = gaussian(rng, d, spec.noise_sigma);
        simd::axpy(1.0, noise, infused);
      }
      const int label = simd::dot(clean, spec.task_dir) > 0.0 ? 1 : 0;
      const Split split = pair_split[i];
      const std::string pair_id = name + ":" + std::to_string(i);

      std::copy(clean.begin(), clean.end(), out.embeddings.row(row).begin());
      labels.sample_ids.push_back(name + "_" + std::to_string(i) + "_clean");
      labels.splits.push_back(split);
      labels.task_labels.push_back(label);
      labels.pair_ids.push_back(pair_id);
      ++row;

      std::copy(infused.begin(), infused.end(), out.embeddings.row(row).begin());
      labels.sample_ids.push_back(name + "_" + std::to_string(i) + "_infused");
      labels.splits.push_back(split);
      labels.task_labels.push_back(
          split == Split::train && spec.confound_class >= 0 ? spec.confound_class : label);
      labels.pair_ids.push_back(pair_id);
      labels.concepts[name][row] = 1;
      ++row;
    }
    out.ground_truth.push_back(normalize(v));
  }
  labels.validate();
  return out;
}

}  // namespace cavkit
