#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cavkit/cav.hpp"
#include "cavkit/labels.hpp"
#include "cavkit/metrics.hpp"
#include "cavkit/sampling.hpp"
#include "cavkit/synthetic.hpp"

namespace cavkit::harness {

inline const std::vector<std::string> kAllMetrics = {"auc", "mad", "ms", "ccr", "f1", "cd", "sd"};

// Settings for training an SAE on the train split when no sae_dir is given.
struct SaeTraining {
  std::size_t m = 64;
  std::size_t k = 8;
  std::size_t epochs = 300;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
};

struct BenchmarkConfig {
  std::filesystem::path embeddings_path;
  std::filesystem::path labels_path;
  std::optional<SyntheticSpec> synthetic;

  std::vector<std::string> concepts;  // empty: every concept column
  std::string target_task = "task_label";
  std::vector<cav::MethodId> methods;
  std::size_t n_per_side = kDefaultSamplesPerSide;
  std::vector<std::uint64_t> seeds{0};
  std::optional<SamplingStrategy> sampling;  // unset: paired when pairs exist
  std::string group_key;

  std::filesystem::path sae_dir;
  std::optional<SaeTraining> sae_training;

  std::string steering = "orthogonalize";
  std::vector<std::string> metrics = kAllMetrics;
  std::filesystem::path output_dir = "out";
  Split vector_split = Split::val;
  metrics::TieRule auc_ties = metrics::TieRule::half;
  bool standardize = false;
  bool center_pca = true;

  std::string source_text;  // raw config bytes, hashed into every report row

  bool wants(std::string_view metric) const;
  bool needs_sae() const;

  // Throws ConfigInvalid.
  void validate() const;
};

// Relative paths resolve against base_dir. Throws ConfigInvalid.
BenchmarkConfig parse_config(const std::string& yaml_text,
                             const std::filesystem::path& base_dir = {});
// Throws IoError when the file cannot be read.
BenchmarkConfig load_config(const std::filesystem::path& path);

// A `synthetic:` block (or a bare mapping with the same keys).
SyntheticSpec parse_synthetic_spec(const std::string& yaml_text);

// 16 hex digits of FNV-1a over the config bytes and the seed list.
std::string config_hash(const BenchmarkConfig& config, const std::vector<std::uint64_t>& seeds);

}  // namespace cavkit::harness
