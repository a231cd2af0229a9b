#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cavkit::harness {

// One metric value for a (method, concept, seed) cell, or an aggregate over
// a method's cells (seed = "agg", concept = "all").
struct ReportRow {
  std::string method;
  std::string concept_name;
  std::string seed;
  std::string metric;
  std::optional<double> value;
  std::string status = "ok";  // "ok" or "failed:<ErrorCode>"
  std::optional<double> threshold;
  std::string config_hash;
  std::optional<double> two_se;  // aggregates only

  bool is_aggregate() const noexcept { return seed == "agg"; }
  bool ok() const noexcept { return status == "ok"; }
};

// Cells ordered by (method, concept, numeric seed, metric); aggregates
// follow, ordered by (method, metric).
void sort_rows(std::vector<ReportRow>& rows);

// Appends one aggregate row per (method, metric) over the ok cells.
void append_aggregates(std::vector<ReportRow>& rows, const std::string& config_hash);

inline constexpr const char* kCsvHeader =
    "method,concept,seed,metric,value,status,threshold,config_hash,two_se";

void write_csv(const std::vector<ReportRow>& rows, std::ostream& out);
// Throws IoError.
void emit_csv(const std::vector<ReportRow>& rows, const std::filesystem::path& path);

// Table-style number: |x| < 1 drops the leading zero (".88", "-.75") with two
// decimals; then 2 decimals below 10, 1 below 100, none above.
std::string format_table_number(double x);
// "mean±2se"
std::string format_cell(double mean, double two_se);

// One table per metric, one line per method; failed aggregates print "—".
void write_markdown(const std::vector<ReportRow>& rows, std::ostream& out);
void emit_markdown(const std::vector<ReportRow>& rows, const std::filesystem::path& path);

}  // namespace cavkit::harness
