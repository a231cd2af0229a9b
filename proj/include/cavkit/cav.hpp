#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cavkit/matrix.hpp"
#include "cavkit/probes.hpp"
#include "cavkit/sae.hpp"
#include "cavkit/sampling.hpp"

namespace cavkit::cav {

enum class MethodId : std::uint8_t {
  diffmean,
  diffmedian,
  svm,
  lr,
  fastcav,
  patcav,
  pca,
  pospca,
  lat,
  aura,
  sae_diffmean,
  sae_diffmedian,
  sae_fastcav,
  sas,
  sae_lr,
  sp_topk,
  sae_aura_dec,
  sae_aura_enc,
};

std::string_view to_string(MethodId id);
std::optional<MethodId> parse_method(std::string_view text);
const std::vector<MethodId>& all_methods();
bool uses_sae(MethodId id);

inline constexpr std::size_t kSpTopK = 16;

// 0.30, 0.31, ..., 1.00
Vector sas_tau_grid();

struct CavMeta {
  std::optional<double> C;
  std::optional<double> C_stage1;  // sp_topk: C of the L1 selection stage
  std::optional<double> tau;
  std::optional<IndexSet> S;
  Pairing pairing = Pairing::unpaired;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::uint64_t seed = 0;
  bool standardized = false;
  bool centered = false;
  std::vector<std::string> flags;
};

struct Cav {
  UnitVector direction;
  MethodId method = MethodId::diffmean;
  std::string concept_name;
  CavMeta meta;
};

struct ExtractOptions {
  Vector c_grid = probes::default_c_grid();
  probes::SolverOptions solver;
  bool balanced = true;
  // z-score features before LR/SVM fits; weights are mapped back to the raw
  // space before normalization
  bool standardize = false;
  bool center_pca = true;
  std::size_t sp_topk_k = kSpTopK;
};

// Base methods on the representation store M (rows indexed by D).
Cav diff_mean(const ConceptDataset& D, const Matrix& M);
Cav diff_median(const ConceptDataset& D, const Matrix& M);
Cav fast_cav(const ConceptDataset& D, const Matrix& M);
Cav pat_cav(const ConceptDataset& D, const Matrix& M);
Cav pca_cav(const ConceptDataset& D, const Matrix& M, bool positives_only, bool center = true);
Cav lat_cav(const ConceptDataset& D, const Matrix& M);
Cav svm_cav(const ConceptDataset& D, const Matrix& M, const ExtractOptions& options = {});
Cav lr_cav(const ConceptDataset& D, const Matrix& M, const ExtractOptions& options = {},
           probes::Penalty penalty = probes::Penalty::l2);

// Per-dimension weights 2 (AUC_j - 0.5) where AUC_j > 0.5, else 0, on any
// feature matrix X.
Vector aura_weights(const Matrix& X, std::span<const std::size_t> pos,
                    std::span<const std::size_t> neg);
Cav aura_cav(const ConceptDataset& D, const Matrix& M);

enum class Aggregator : std::uint8_t { mean, median, fastcav };
enum class AuraVariant : std::uint8_t { decoder, encoder_transpose };

// SAE methods. M is in the original representation space; it is rescaled by
// sae.scale before encoding.
Cav sae_aggregate_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
                      Aggregator aggregator);
Cav sas_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae);
Cav sae_lr_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
               const ExtractOptions& options = {});
Cav sp_topk_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
                const ExtractOptions& options = {});
Cav sae_aura_cav(const ConceptDataset& D, const Matrix& M, const sae::SaeParams& sae,
                 AuraVariant variant);

// Dispatch by id. `sae` is required for SAE methods (InvalidArgument
// otherwise).
Cav extract(MethodId method, const ConceptDataset& D, const Matrix& M,
            const sae::SaeParams* sae = nullptr, const ExtractOptions& options = {});

// <stem>.cavb (1 x d) and <stem>.meta.
void save_cav(const Cav& cav, const std::filesystem::path& stem);
Cav load_cav(const std::filesystem::path& stem);

}  // namespace cavkit::cav
