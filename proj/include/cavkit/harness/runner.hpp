#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cavkit/cav.hpp"
#include "cavkit/harness/config.hpp"
#include "cavkit/harness/report.hpp"
#include "cavkit/labels.hpp"
#include "cavkit/matrix.hpp"
#include "cavkit/probes.hpp"
#include "cavkit/sae.hpp"

namespace cavkit::harness {

// Everything a run reads: the store, its labels and (optionally) an SAE.
struct Workspace {
  Matrix embeddings;
  LabelTable labels;
  std::optional<sae::SaeParams> sae;
  std::vector<std::string> concepts;
  std::vector<UnitVector> ground_truth;  // synthetic runs only
};

// Generates or loads the data named by the config. Throws ConfigInvalid for
// unsatisfiable requests (unknown concepts, SD without pairs) and the io
// errors of the loaders.
Workspace prepare_workspace(const BenchmarkConfig& config);

struct ExtractedCav {
  cav::MethodId method;
  std::string concept_name;
  std::uint64_t seed = 0;
  std::optional<cav::Cav> cav;
  std::string status = "ok";
};

struct RunOptions {
  std::optional<std::vector<std::uint64_t>> seeds;  // overrides config.seeds
  std::size_t jobs = 1;
};

struct RunResult {
  std::vector<ReportRow> rows;  // sorted, aggregates included
  std::vector<ExtractedCav> cavs;
  std::string config_hash;
  bool partial_failure = false;
  probes::LinearModel task_probe;
};

RunResult run_benchmark(const BenchmarkConfig& config, const Workspace& workspace,
                        const RunOptions& options = {});
RunResult run_benchmark(const BenchmarkConfig& config, const RunOptions& options = {});

// report.csv, report.md and cavs/<method>__<concept>__seed<k>.{cavb,meta}
// under dir. Throws IoError.
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

}  // namespace cavkit::harness
