// cavkit command-line entry point: run / gen-synthetic / extract / inspect-cav.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cavkit/cav.hpp"
#include "cavkit/error.hpp"
#include "cavkit/harness/config.hpp"
#include "cavkit/harness/runner.hpp"
#include "cavkit/io.hpp"
#include "cavkit/linalg.hpp"
#include "cavkit/sampling.hpp"
#include "cavkit/synthetic.hpp"

namespace {

using namespace cavkit;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;
constexpr int kExitIo = 3;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::BadMagic:
    case ErrorCode::VersionMismatch:
    case ErrorCode::TruncatedFile:
    case ErrorCode::NonFiniteValue:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (...) {
      used = 0;
    }
    if (used != item.size()) fail(ErrorCode::ConfigInvalid, "bad seed '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCode::ConfigInvalid, "--seeds is empty");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, const std::string& seeds, const std::string& out,
            std::size_t jobs) {
  const auto config = harness::load_config(config_path);
  harness::RunOptions options;
  if (!seeds.empty()) options.seeds = parse_seed_list(seeds);
  options.jobs = jobs;
  const auto result = harness::run_benchmark(config, options);
  const std::filesystem::path dir = out.empty() ? config.output_dir : std::filesystem::path(out);
  harness::write_outputs(result, dir);
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += (!r.is_aggregate() && !r.ok()) ? 1 : 0;
  std::cout << "wrote " << (dir / "report.csv").string() << " (" << result.rows.size()
            << " rows, " << failed << " failed cells, config " << result.config_hash << ")\n";
  return result.partial_failure ? kExitPartial : kExitOk;
}

int cmd_gen_synthetic(const std::string& spec_path, const std::string& out) {
  const auto spec = harness::parse_synthetic_spec(read_file(spec_path));
  const auto data = generate_synthetic(spec);
  const std::filesystem::path dir(out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
  io::save_embeddings(data.embeddings, dir / "embeddings.cavb");
  write_label_csv(data.labels, dir / "labels.csv");
  Matrix dirs(data.ground_truth.size(), spec.d);
  for (std::size_t i = 0; i < data.ground_truth.size(); ++i) {
    std::copy(data.ground_truth[i].values().begin(), data.ground_truth[i].values().end(),
              dirs.row(i).begin());
  }
  io::save_matrix(dirs, dir / "directions.cavb");
  io::save_matrix(io::row_vector(spec.task_dir), dir / "task_dir.cavb");
  std::cout << "wrote " << data.embeddings.rows() << " x " << data.embeddings.cols()
            << " embeddings and " << spec.concept_names.size() << " planted directions to "
            << dir.string() << "\n";
  return kExitOk;
}

void print_cav(const cav::Cav& c, std::size_t top) {
  const auto v = c.direction.values();
  std::cout << "method  " << cav::to_string(c.method) << "\n"
            << "concept " << c.concept_name << "\n"
            << "dim     " << v.size() << "\n"
            << "norm    " << norm(v) << "\n";
  IndexSet order = all_rows(v.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(v[a]) > std::abs(v[b]); });
  order.resize(std::min(top, order.size()));
  std::cout << "top components:\n";
  for (std::size_t j : order) std::cout << "  [" << j << "] " << v[j] << "\n";
  if (c.meta.C) std::cout << "C       " << *c.meta.C << "\n";
  if (c.meta.C_stage1) std::cout << "C_stage1 " << *c.meta.C_stage1 << "\n";
  if (c.meta.tau) std::cout << "tau     " << *c.meta.tau << "\n";
  if (c.meta.S) {
    std::cout << "S       ";
    for (std::size_t i = 0; i < c.meta.S->size(); ++i) std::cout << (i ? "," : "") << (*c.meta.S)[i];
    std::cout << "\n";
  }
  std::cout << "seed    " << c.meta.seed << "\n"
            << "pairing " << (c.meta.pairing == Pairing::counterfactual ? "counterfactual" : "unpaired")
            << "\n"
            << "n       " << c.meta.n_pos << " pos / " << c.meta.n_neg << " neg\n";
  for (const auto& f : c.meta.flags) std::cout << "flag    " << f << "\n";
}

int cmd_extract(const std::string& config_path, const std::string& method_name,
                const std::string& concept_name, std::uint64_t seed, const std::string& out) {
  const auto config = harness::load_config(config_path);
  const auto method = cav::parse_method(method_name);
  if (!method) fail(ErrorCode::ConfigInvalid, "unknown method '" + method_name + "'");
  auto restricted = config;
  restricted.methods = {*method};
  restricted.concepts = {concept_name};
  const auto ws = harness::prepare_workspace(restricted);
  SamplingRequest req{concept_name, config.n_per_side, seed,
                      config.sampling.value_or(ws.labels.has_pairs()
                                                   ? SamplingStrategy::paired_counterfactual
                                                   : SamplingStrategy::random_balanced),
                      config.group_key};
  const auto D = sample_concept_sets(ws.labels, req);
  cav::ExtractOptions options;
  options.standardize = config.standardize;
  options.center_pca = config.center_pca;
  const auto c = cav::extract(*method, D, ws.embeddings, ws.sae ? &*ws.sae : nullptr, options);
  const std::filesystem::path dir =
      (out.empty() ? config.output_dir : std::filesystem::path(out)) / "cavs";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + dir.string());
  const auto stem = dir / (method_name + "__" + concept_name + "__seed" + std::to_string(seed));
  cav::save_cav(c, stem);
  print_cav(c, 5);
  std::cout << "saved   " << stem.string() << ".cavb\n";
  return kExitOk;
}

int cmd_inspect(std::string path, std::size_t top) {
  for (const char* ext : {".cavb", ".meta"}) {
    if (path.size() > 5 && path.ends_with(ext)) path.resize(path.size() - 5);
  }
  print_cav(cav::load_cav(path), top);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cavkit: concept activation vectors, steering and their evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seeds;
  std::string out;
  std::size_t jobs = 1;
  auto* run = app.add_subcommand("run", "run a benchmark config");
  run->add_option("--config", config_path, "benchmark YAML")->required();
  run->add_option("--seeds", seeds, "comma-separated seeds overriding the config");
  run->add_option("--out", out, "output directory (default: config output_dir)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string spec_path;
  auto* gen = app.add_subcommand("gen-synthetic", "write a planted-concept dataset");
  gen->add_option("--spec", spec_path, "synthetic spec YAML")->required();
  gen->add_option("--out", out, "output directory")->required();

  std::string method;
  std::string concept_name;
  std::uint64_t seed = 0;
  auto* extract = app.add_subcommand("extract", "extract one CAV");
  extract->add_option("--config", config_path, "benchmark YAML")->required();
  extract->add_option("--method", method, "method id")->required();
  extract->add_option("--concept", concept_name, "concept name")->required();
  extract->add_option("--seed", seed, "sampling seed");
  extract->add_option("--out", out, "output directory (default: config output_dir)");

  std::string cav_path;
  std::size_t top = 10;
  auto* inspect = app.add_subcommand("inspect-cav", "print a stored CAV");
  inspect->add_option("path", cav_path, "CAV stem, .cavb or .meta path")->required();
  inspect->add_option("--top", top, "number of components to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seeds, out, jobs);
    if (*gen) return cmd_gen_synthetic(spec_path, out);
    if (*extract) return cmd_extract(config_path, method, concept_name, seed, out);
    if (*inspect) return cmd_inspect(cav_path, top);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
