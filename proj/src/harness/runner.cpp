#include "cavkit/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "cavkit/error.hpp"
#include "cavkit/io.hpp"
#include "cavkit/metrics.hpp"
#include "cavkit/sampling.hpp"
#include "cavkit/simd/kernels.hpp"
#include "cavkit/steer.hpp"
#include "cavkit/synthetic.hpp"

namespace cavkit::harness {
namespace {

constexpr std::size_t kAllAvailable = std::numeric_limits<std::size_t>::max();

// Runs fn(0..n-1) on up to `jobs` threads; results are written by index, so
// collection order never depends on scheduling.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string failed(const Error& e) { return "failed:" + std::string(to_string(e.code())); }

template <typename T>
struct Attempt {
  std::optional<T> value;
  std::string status = "ok";
};

template <typename F>
auto attempt(F&& f) -> Attempt<decltype(f())> {
  Attempt<decltype(f())> out;
  try {
    out.value = f();
  } catch (const Error& e) {
    out.status = failed(e);
  }
  return out;
}

// Sampled sets for one (concept, seed).
struct ConceptSets {
  Attempt<ConceptDataset> train;
  Attempt<ConceptDataset> vector_eval;
  Attempt<ConceptDataset> test_eval;
  Attempt<ConceptDataset> test_pairs;
  IndexSet test_absent;
};

struct Cell {
  std::size_t seed_index;
  std::size_t concept_index;
  std::size_t method_index;
};

std::vector<int> take(const std::vector<int>& column, const IndexSet& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(column[r]);
  return out;
}

}  // namespace

Workspace prepare_workspace(const BenchmarkConfig& config) {
  config.validate();
  Workspace ws;
  if (config.synthetic) {
    SyntheticData data = generate_synthetic(*config.synthetic);
    ws.embeddings = std::move(data.embeddings);
    ws.labels = std::move(data.labels);
    ws.ground_truth = std::move(data.ground_truth);
  } else {
    ws.embeddings = io::load_embeddings(config.embeddings_path);
    ws.labels = read_label_csv(config.labels_path);
    if (ws.labels.size() != ws.embeddings.rows()) {
      fail(ErrorCode::ConfigInvalid, "label rows and embedding rows differ");
    }
  }
  ws.concepts = config.concepts.empty() ? ws.labels.concept_names : config.concepts;
  if (ws.concepts.empty()) fail(ErrorCode::ConfigInvalid, "no concepts to evaluate");
  for (const auto& c : ws.concepts) {
    if (ws.labels.concepts.count(c) == 0) fail(ErrorCode::ConfigInvalid, "unknown concept '" + c + "'");
  }
  if (config.wants("sd") && !ws.labels.has_pairs()) {
    fail(ErrorCode::ConfigInvalid, "SD needs counterfactual pairs (pair_id column)");
  }
  if ((config.wants("cd") || config.wants("sd")) && config.target_task != "task_label" &&
      ws.labels.concepts.count(config.target_task) == 0) {
    fail(ErrorCode::ConfigInvalid, "unknown target_task '" + config.target_task + "'");
  }
  if (config.needs_sae()) {
    if (!config.sae_dir.empty()) {
      ws.sae = sae::load_bundle(config.sae_dir);
      if (ws.sae->input_dim() != ws.embeddings.cols()) {
        fail(ErrorCode::ConfigInvalid, "SAE width does not match the embeddings");
      }
    } else {
      const auto& t = *config.sae_training;
      const auto store = sae::normalize_store(ws.embeddings.select_rows(ws.labels.rows_in(Split::train)));
      ws.sae = sae::train_sae(store.data, {t.m, t.k, t.epochs, t.learning_rate, t.seed});
      ws.sae->scale = store.scale;
    }
  }
  return ws;
}

RunResult run_benchmark(const BenchmarkConfig& config, const RunOptions& options) {
  return run_benchmark(config, prepare_workspace(config), options);
}

RunResult run_benchmark(const BenchmarkConfig& config, const Workspace& ws,
                        const RunOptions& options) {
  const auto seeds = options.seeds.value_or(config.seeds);
  if (seeds.empty()) fail(ErrorCode::ConfigInvalid, "no seeds to run");
  RunResult result;
  result.config_hash = config_hash(config, seeds);
  const Matrix& M = ws.embeddings;
  const LabelTable& labels = ws.labels;
  const auto strategy = config.sampling.value_or(
      labels.has_pairs() ? SamplingStrategy::paired_counterfactual : SamplingStrategy::random_balanced);

  // Downstream probe: fitted once on the unsteered train split.
  const bool steering_metrics = config.wants("cd") || config.wants("sd");
  std::vector<int> task;
  Attempt<probes::LinearModel> probe;
  if (steering_metrics) {
    task = labels.integer_column(config.target_task);
    probe = attempt([&] {
      const IndexSet train = labels.rows_in(Split::train);
      const auto y = take(task, train);
      if (y.empty()) fail(ErrorCode::EmptyEval, "train split is empty");
      if (*std::min_element(y.begin(), y.end()) < 0) fail(ErrorCode::InvalidArgument, "negative task label");
      const auto classes = static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
      return probes::fit_task_probe(M.select_rows(train), y, classes);
    });
    if (probe.value) result.task_probe = *probe.value;
  }

  // Sampling per (seed, concept).
  const std::size_t n_concepts = ws.concepts.size();
  std::vector<ConceptSets> sets(seeds.size() * n_concepts);
  const IndexSet test_rows = labels.rows_in(Split::test);
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (std::size_t c = 0; c < n_concepts; ++c) {
      const auto& name = ws.concepts[c];
      ConceptSets& cs = sets[s * n_concepts + c];
      SamplingRequest req{name, config.n_per_side, seeds[s], strategy, config.group_key};
      cs.train = attempt([&] { return sample_concept_sets(labels, req); });
      req.split = config.vector_split;
      cs.vector_eval = attempt([&] { return sample_concept_sets(labels, req); });
      req.split = Split::test;
      cs.test_eval = attempt([&] { return sample_concept_sets(labels, req); });
      req.strategy = SamplingStrategy::paired_counterfactual;
      req.n_per_side = kAllAvailable;
      cs.test_pairs = attempt([&] { return sample_concept_sets(labels, req); });
      const auto& column = labels.concept_column(name);
      for (std::size_t r : test_rows) {
        if (!column[r]) cs.test_absent.push_back(r);
      }
    }
  }

  // Extraction. Methods only ever see the train-split ConceptDataset.
  std::vector<Cell> cells;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      for (std::size_t c = 0; c < n_concepts; ++c) cells.push_back({s, c, m});
    }
  }
  cav::ExtractOptions extract_options;
  extract_options.standardize = config.standardize;
  extract_options.center_pca = config.center_pca;
  result.cavs.resize(cells.size());
  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const ConceptSets& cs = sets[cell.seed_index * n_concepts + cell.concept_index];
    ExtractedCav& out = result.cavs[i];
    out.method = config.methods[cell.method_index];
    out.concept_name = ws.concepts[cell.concept_index];
    out.seed = seeds[cell.seed_index];
    if (!cs.train.value) {
      out.status = cs.train.status;
      return;
    }
    const sae::SaeParams* sae = ws.sae ? &*ws.sae : nullptr;
    auto got = attempt([&] { return cav::extract(out.method, *cs.train.value, M, sae, extract_options); });
    out.cav = std::move(got.value);
    out.status = got.status;
  });

  auto cav_at = [&](std::size_t s, std::size_t m, std::size_t c) -> const ExtractedCav& {
    return result.cavs[(s * config.methods.size() + m) * n_concepts + c];
  };

  // Metrics per cell.
  std::vector<std::vector<ReportRow>> cell_rows(cells.size());
  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const ExtractedCav& ex = result.cavs[i];
    const ConceptSets& cs = sets[cell.seed_index * n_concepts + cell.concept_index];
    auto& rows = cell_rows[i];
    auto emit = [&](const std::string& metric, const Attempt<double>& a,
                    std::optional<double> threshold = std::nullopt) {
      ReportRow r;
      r.method = std::string(cav::to_string(ex.method));
      r.concept_name = ex.concept_name;
      r.seed = std::to_string(ex.seed);
      r.metric = metric;
      r.value = a.value;
      r.status = a.status;
      r.threshold = threshold;
      r.config_hash = result.config_hash;
      rows.push_back(std::move(r));
    };
    auto fail_all = [&](const std::string& status) {
      Attempt<double> a;
      a.status = status;
      for (const auto& m : config.metrics) {
        emit(m, a);
        if (m == "ms" || m == "cd") emit(m + "_abs", a);
      }
    };
    if (!ex.cav) {
      fail_all(ex.status);
      return;
    }
    const auto& v = ex.cav->direction;

    std::vector<std::span<const double>> others;
    for (std::size_t c = 0; c < n_concepts; ++c) {
      if (c == cell.concept_index) continue;
      const auto& other = cav_at(cell.seed_index, cell.method_index, c);
      if (other.cav) others.push_back(other.cav->direction.values());
    }
    auto vector_sets = [&]() -> const ConceptDataset& {
      if (!cs.vector_eval.value) fail(ErrorCode::EmptySelection, "no evaluation set on the vector split");
      return *cs.vector_eval.value;
    };

    for (const auto& metric : config.metrics) {
      if (metric == "auc") {
        emit(metric, attempt([&] {
               const auto& e = vector_sets();
               return metrics::auc(metrics::project(M, e.positives, e.negatives, v.values()), config.auc_ties);
             }));
      } else if (metric == "mad") {
        emit(metric, attempt([&] {
               const auto& e = vector_sets();
               return metrics::mad(metrics::project(M, e.positives, e.negatives, v.values()));
             }));
      } else if (metric == "ms") {
        const auto ms = attempt([&] { return metrics::max_similarity(v.values(), others); });
        emit("ms", ms);
        Attempt<double> abs_ms = ms;
        if (abs_ms.value) abs_ms.value = std::abs(*abs_ms.value);
        emit("ms_abs", abs_ms);
      } else if (metric == "ccr") {
        emit(metric, attempt([&] {
               const auto& e = vector_sets();
               return metrics::ccr(M, v.values(), others, e.positives, e.negatives, config.auc_ties).value;
             }));
      } else if (metric == "f1") {
        std::optional<double> threshold;
        const auto f = attempt([&] {
          const auto& D = *cs.train.value;
          const IndexSet train_rows = D.rows();
          Vector scores;
          for (std::size_t r : train_rows) scores.push_back(simd::dot(M.row(r), v.values()));
          const auto t = metrics::youden_threshold(scores, D.labels());
          threshold = t.threshold;
          if (!cs.test_eval.value) fail(ErrorCode::EmptyEval, "no evaluation set on the test split");
          const auto& e = *cs.test_eval.value;
          const IndexSet eval_rows = e.rows();
          std::vector<int> predicted;
          for (std::size_t r : eval_rows) {
            predicted.push_back(simd::dot(M.row(r), v.values()) > t.threshold ? 1 : 0);
          }
          return metrics::f1(e.labels(), predicted).value;
        });
        emit(metric, f, threshold);
      } else if (metric == "cd") {
        const auto cd = attempt([&] {
          if (!probe.value) fail(ErrorCode::SingleClass, "task probe unavailable: " + probe.status);
          const Matrix clean = M.select_rows(cs.test_absent);
          return metrics::collateral_damage(*probe.value, clean, steer::orthogonalize_all(clean, v),
                                            take(task, cs.test_absent));
        });
        Attempt<double> signed_cd;
        Attempt<double> abs_cd;
        signed_cd.status = abs_cd.status = cd.status;
        if (cd.value) {
          signed_cd.value = cd.value->signed_points;
          abs_cd.value = cd.value->abs_points;
        }
        emit("cd", signed_cd);
        emit("cd_abs", abs_cd);
      } else if (metric == "sd") {
        emit(metric, attempt([&] {
               if (!probe.value) fail(ErrorCode::SingleClass, "task probe unavailable: " + probe.status);
               if (!cs.test_pairs.value) fail(ErrorCode::NoPairMapping, "no test counterfactual pairs");
               const auto& pairs = *cs.test_pairs.value;
               const Matrix clean = M.select_rows(pairs.negatives);
               const Matrix infused = M.select_rows(pairs.positives);
               return metrics::steering_disparity(*probe.value, clean, take(task, pairs.negatives),
                                                  steer::orthogonalize_all(infused, v), infused,
                                                  take(task, pairs.positives))
                   .value;
             }));
      }
    }
  });

  for (auto& rows : cell_rows) {
    for (auto& r : rows) {
      if (!r.ok()) result.partial_failure = true;
      result.rows.push_back(std::move(r));
    }
  }
  sort_rows(result.rows);
  append_aggregates(result.rows, result.config_hash);
  sort_rows(result.rows);
  return result;
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "cavs", ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + (dir / "cavs").string());
  emit_csv(result.rows, dir / "report.csv");
  emit_markdown(result.rows, dir / "report.md");
  for (const auto& ex : result.cavs) {
    if (!ex.cav) continue;
    const std::string stem = std::string(cav::to_string(ex.method)) + "__" + ex.concept_name +
                             "__seed" + std::to_string(ex.seed);
    cav::save_cav(*ex.cav, dir / "cavs" / stem);
  }
}

}  // namespace cavkit::harness
