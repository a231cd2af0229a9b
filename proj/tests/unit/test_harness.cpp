#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "cavkit/harness/config.hpp"
#include "cavkit/harness/report.hpp"
#include "cavkit/harness/runner.hpp"
#include "cavkit/linalg.hpp"
#include "helpers.hpp"

using namespace cavkit;
using namespace cavkit::harness;
using testing::code_of;

namespace {

const char* kSmall = R"(
synthetic:
  d: 10
  n_per_side: 80
  concepts: [a, b]
  beta: 2.0
  noise_sigma: 0.1
  seed: 4
)";

std::string small_config(const std::string& methods, const std::string& extra = "") {
  return "synthetic:\n  d: 10\n  n_per_side: 80\n  concepts: [a, b]\n  beta: 2.0\n"
         "  noise_sigma: 0.1\n  seed: 4\nmethods: " +
         methods + "\nn_per_side: 40\nseeds: [0, 1]\n" + extra;
}

const ReportRow* find(const std::vector<ReportRow>& rows, const std::string& method,
                      const std::string& concept_name, const std::string& seed, const std::string& metric) {
  for (const auto& r : rows) {
    if (r.method == method && r.concept_name == concept_name && r.seed == seed && r.metric == metric) return &r;
  }
  return nullptr;
}

std::string csv_of(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  write_csv(rows, out);
  return out.str();
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const auto c = parse_config("methods: [diffmean]\nsynthetic: {d: 4}\n");
  CHECK(c.n_per_side == 500);
  CHECK(c.seeds == std::vector<std::uint64_t>{0});
  CHECK(c.metrics == kAllMetrics);
  CHECK(c.steering == "orthogonalize");
  CHECK(c.vector_split == Split::val);
  REQUIRE(c.synthetic.has_value());
  CHECK(c.synthetic->d == 4);

  CHECK(code_of([] { parse_config("methods: [diffmean]\nsynthetic: {d: 4}\nbogus: 1\n"); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(code_of([] { parse_config("methods: [nope]\nsynthetic: {d: 4}\n"); }) == ErrorCode::ConfigInvalid);
  CHECK(code_of([] { parse_config("methods: [diffmean]\nsynthetic: {d: 4, typo: 2}\n"); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(code_of([] { parse_config("methods: [diffmean]\nsynthetic: {d: 4}\nmetrics: [xyz]\n"); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(code_of([] { load_config("/nonexistent/config.yaml"); }) == ErrorCode::IoError);
  // SAE methods without an SAE source
  CHECK(code_of([] { parse_config("methods: [sae_diffmean]\nsynthetic: {d: 4}\n").validate(); }) ==
        ErrorCode::ConfigInvalid);

  const auto spec = parse_synthetic_spec(kSmall);
  CHECK(spec.d == 10);
  CHECK(spec.concept_names == std::vector<std::string>{"a", "b"});
  CHECK(spec.beta == 2.0);
}

TEST_CASE("config hash") {
  auto c = parse_config(small_config("[diffmean]"));
  const auto h = config_hash(c, {0, 1});
  CHECK(h.size() == 16);
  CHECK(std::all_of(h.begin(), h.end(), [](char ch) { return std::isxdigit(static_cast<unsigned char>(ch)); }));
  CHECK(config_hash(c, {0, 1}) == h);
  CHECK(config_hash(c, {0, 2}) != h);
  c.source_text += " ";
  CHECK(config_hash(c, {0, 1}) != h);
}

TEST_CASE("csv output and aggregates") {
  CHECK(csv_of({}) == std::string(kCsvHeader) + "\n");

  std::vector<ReportRow> rows;
  ReportRow r;
  r.method = "diffmean";
  r.concept_name = "a";
  r.seed = "0";
  r.metric = "auc";
  r.value = 0.0;
  r.config_hash = "00000000deadbeef";
  rows.push_back(r);
  const auto one = csv_of(rows);
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(one.find("diffmean,a,0,auc,") != std::string::npos);

  r.seed = "1";
  r.value = 2.0;
  rows.push_back(r);
  append_aggregates(rows, r.config_hash);
  const auto* agg = find(rows, "diffmean", "all", "agg", "auc");
  REQUIRE(agg != nullptr);
  CHECK(agg->is_aggregate());
  CHECK(*agg->value == doctest::Approx(1.0));
  CHECK(*agg->two_se == doctest::Approx(2.0));
}

TEST_CASE("table formatting") {
  CHECK(format_table_number(0.88) == ".88");
  CHECK(format_table_number(-0.75) == "-.75");
  CHECK(format_table_number(3.14159) == "3.14");
  CHECK(format_table_number(42.25) == "42.2");
  CHECK(format_table_number(512.6) == "513");
  CHECK(format_cell(0.88, 0.03) == ".88±.03");
  CHECK(format_cell(0.88, 0.0) == ".88±.00");

  std::vector<ReportRow> rows(2);
  rows[0] = {"diffmean", "all", "agg", "auc", 0.88, "ok", std::nullopt, "h", 0.03};
  rows[1] = {"lat", "all", "agg", "auc", std::nullopt, "failed:Empty", std::nullopt, "h", std::nullopt};
  std::ostringstream md;
  write_markdown(rows, md);
  CHECK(md.str().find(".88±.03") != std::string::npos);
  CHECK(md.str().find("—") != std::string::npos);
}

TEST_CASE("sort_rows orders cells then aggregates") {
  std::vector<ReportRow> rows;
  for (const char* seed : {"10", "2", "agg"}) {
    for (const char* method : {"lr", "diffmean"}) {
      ReportRow r;
      r.method = method;
      r.concept_name = std::string(seed) == "agg" ? "all" : "a";
      r.seed = seed;
      r.metric = "auc";
      rows.push_back(r);
    }
  }
  sort_rows(rows);
  std::vector<std::string> order;
  for (const auto& r : rows) order.push_back(r.method + "/" + r.seed);
  CHECK(order == std::vector<std::string>{"diffmean/2", "diffmean/10", "lr/2", "lr/10", "diffmean/agg", "lr/agg"});
}

TEST_CASE("synthetic run recovers separable concepts") {
  const auto config = parse_config(small_config("[diffmean, svm]", "metrics: [auc, ms, f1, cd]\n"));
  const auto result = run_benchmark(config);
  CHECK_FALSE(result.partial_failure);
  for (const char* concept_name : {"a", "b"}) {
    for (const char* seed : {"0", "1"}) {
      const auto* auc = find(result.rows, "diffmean", concept_name, seed, "auc");
      REQUIRE(auc != nullptr);
      REQUIRE(auc->ok());
      CHECK(*auc->value >= 1.0 - 1e-6);
      const auto* f1 = find(result.rows, "diffmean", concept_name, seed, "f1");
      REQUIRE(f1 != nullptr);
      CHECK(f1->threshold.has_value());
    }
  }
  CHECK(find(result.rows, "svm", "all", "agg", "cd") != nullptr);
  CHECK(result.cavs.size() == 2 * 2 * 2);
  for (const auto& c : result.cavs) CHECK(c.cav.has_value());
}

TEST_CASE("a failing cell does not disturb the others") {
  // noiseless data: every negative projects to the same score, so MAD fails
  auto text = small_config("[diffmean, lr]", "metrics: [auc, mad]\n");
  text.replace(text.find("noise_sigma: 0.1"), 16, "noise_sigma: 0.0");
  const auto config = parse_config(text);
  const auto result = run_benchmark(config);
  CHECK(result.partial_failure);
  const auto* mad = find(result.rows, "diffmean", "a", "0", "mad");
  REQUIRE(mad != nullptr);
  CHECK(mad->status.rfind("failed:", 0) == 0);
  CHECK_FALSE(mad->value.has_value());
  const auto* auc = find(result.rows, "diffmean", "a", "0", "auc");
  REQUIRE(auc != nullptr);
  CHECK(auc->ok());
  CHECK(*auc->value == 1.0);
  for (const auto& r : result.rows) {
    if (r.metric == "auc") CHECK(r.ok());
  }
}

TEST_CASE("runs are deterministic across thread counts") {
  const auto config = parse_config(small_config("[diffmean, lr, lat, aura]"));
  RunOptions one, four;
  four.jobs = 4;
  const auto a = run_benchmark(config, one);
  const auto b = run_benchmark(config, four);
  CHECK(csv_of(a.rows) == csv_of(b.rows));
}

TEST_CASE("extraction reads only train rows") {
  const auto config = parse_config(small_config("[diffmean, lr, pca]", "metrics: [auc]\n"));
  auto ws = prepare_workspace(config);
  const auto before = run_benchmark(config, ws);
  for (std::size_t i = 0; i < ws.labels.size(); ++i) {
    if (ws.labels.splits[i] == Split::train) continue;
    for (std::size_t j = 0; j < ws.embeddings.cols(); ++j) ws.embeddings(i, j) = 1e3 * (j + 1.0);
  }
  const auto after = run_benchmark(config, ws);
  REQUIRE(before.cavs.size() == after.cavs.size());
  for (std::size_t i = 0; i < before.cavs.size(); ++i) {
    REQUIRE(before.cavs[i].cav.has_value());
    REQUIRE(after.cavs[i].cav.has_value());
    CHECK(before.cavs[i].cav->direction.vector() == after.cavs[i].cav->direction.vector());
  }
}

TEST_CASE("write_outputs") {
  const auto config = parse_config(small_config("[diffmean]", "metrics: [auc]\n"));
  const auto result = run_benchmark(config);
  const auto dir = std::filesystem::temp_directory_path() / "cavkit_test_harness_out";
  std::filesystem::remove_all(dir);
  write_outputs(result, dir);
  CHECK(std::filesystem::exists(dir / "report.csv"));
  CHECK(std::filesystem::exists(dir / "report.md"));
  CHECK(std::filesystem::exists(dir / "cavs" / "diffmean__a__seed0.cavb"));
  CHECK(std::filesystem::exists(dir / "cavs" / "diffmean__b__seed1.meta"));
  std::ifstream in(dir / "report.csv");
  const std::string csv{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  CHECK(csv == csv_of(result.rows));
  std::filesystem::remove_all(dir);
}
