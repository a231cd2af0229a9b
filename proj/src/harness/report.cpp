#include "cavkit/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <tuple>

#include "cavkit/error.hpp"
#include "cavkit/io.hpp"
#include "cavkit/metrics.hpp"

namespace cavkit::harness {
namespace {

const std::vector<std::string> kMetricOrder = {"auc", "mad", "ms",  "ms_abs", "ccr",
                                               "f1",  "cd",  "cd_abs", "sd"};

std::size_t metric_rank(const std::string& m) {
  const auto it = std::find(kMetricOrder.begin(), kMetricOrder.end(), m);
  return static_cast<std::size_t>(it - kMetricOrder.begin());
}

std::uint64_t seed_number(const std::string& s) {
  try {
    return std::stoull(s);
  } catch (...) {
    return 0;
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string opt_number(const std::optional<double>& v) {
  return v ? io::format_double(*v) : std::string();
}

}  // namespace

void sort_rows(std::vector<ReportRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
    if (a.is_aggregate() != b.is_aggregate()) return !a.is_aggregate();
    if (a.is_aggregate()) return std::tie(a.method, a.metric) < std::tie(b.method, b.metric);
    const auto sa = seed_number(a.seed);
    const auto sb = seed_number(b.seed);
    return std::tie(a.method, a.concept_name, sa, a.metric) <
           std::tie(b.method, b.concept_name, sb, b.metric);
  });
}

void append_aggregates(std::vector<ReportRow>& rows, const std::string& config_hash) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (r.is_aggregate()) continue;
    auto& g = groups[{r.method, r.metric}];
    if (r.ok() && r.value) g.push_back(*r.value);
  }
  for (const auto& [key, values] : groups) {
    ReportRow agg;
    agg.method = key.first;
    agg.concept_name = "all";
    agg.seed = "agg";
    agg.metric = key.second;
    agg.config_hash = config_hash;
    if (values.empty()) {
      agg.status = "failed:" + std::string(to_string(ErrorCode::Empty));
    } else {
      const auto a = metrics::aggregate(values);
      agg.value = a.mean;
      agg.two_se = a.two_se;
    }
    rows.push_back(std::move(agg));
  }
}

void write_csv(const std::vector<ReportRow>& rows, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : rows) {
    out << csv_field(r.method) << ',' << csv_field(r.concept_name) << ',' << r.seed << ','
        << r.metric << ',' << opt_number(r.value) << ',' << r.status << ','
        << opt_number(r.threshold) << ',' << r.config_hash << ',' << opt_number(r.two_se)
        << '\n';
  }
}

void emit_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_csv(rows, out);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

std::string format_table_number(double x) {
  char buf[64];
  const double a = std::abs(x);
  if (a < 1.0) {
    std::snprintf(buf, sizeof buf, "%.2f", x);
    std::string s = buf;
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    if (s == "-.00") s = ".00";
    return s;
  }
  if (a < 10.0) {
    std::snprintf(buf, sizeof buf, "%.2f", x);
  } else if (a < 100.0) {
    std::snprintf(buf, sizeof buf, "%.1f", x);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f", x);
  }
  return buf;
}

std::string format_cell(double mean, double two_se) {
  return format_table_number(mean) + "±" + format_table_number(two_se);
}

void write_markdown(const std::vector<ReportRow>& rows, std::ostream& out) {
  std::map<std::string, std::vector<const ReportRow*>> by_metric;
  for (const auto& r : rows) {
    if (r.is_aggregate()) by_metric[r.metric].push_back(&r);
  }
  std::vector<std::string> metrics;
  for (const auto& [m, _] : by_metric) metrics.push_back(m);
  std::stable_sort(metrics.begin(), metrics.end(), [](const std::string& a, const std::string& b) {
    return metric_rank(a) < metric_rank(b);
  });
  bool first = true;
  for (const auto& m : metrics) {
    if (!first) out << '\n';
    first = false;
    out << "## " << m << "\n\n| method | " << m << " |\n|---|---|\n";
    auto group = by_metric[m];
    std::stable_sort(group.begin(), group.end(),
                     [](const ReportRow* a, const ReportRow* b) { return a->method < b->method; });
    for (const ReportRow* r : group) {
      out << "| " << r->method << " | "
          << (r->ok() && r->value ? format_cell(*r->value, r->two_se.value_or(0.0)) : "—")
          << " |\n";
    }
  }
}

void emit_markdown(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_markdown(rows, out);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace cavkit::harness
