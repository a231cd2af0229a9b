#include "cavkit/labels.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cavkit/error.hpp"

namespace cavkit {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

int parse_int(const std::string& text, std::size_t line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::ParseError,
         "line " + std::to_string(line_no) + ": expected integer, got '" + text + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  return std::nullopt;
}

const std::vector<std::uint8_t>& LabelTable::concept_column(const std::string& name) const {
  auto it = concepts.find(name);
  if (it == concepts.end()) fail(ErrorCode::UnknownConcept, "no concept column '" + name + "'");
  return it->second;
}

std::vector<int> LabelTable::integer_column(const std::string& name) const {
  if (name == "task_label") return task_labels;
  const auto& col = concept_column(name);
  return {col.begin(), col.end()};
}

IndexSet LabelTable::rows_in(Split split) const {
  IndexSet out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

void LabelTable::validate() const {
  const std::size_t n = sample_ids.size();
  if (splits.size() != n || task_labels.size() != n) {
    fail(ErrorCode::InvalidArgument, "label table columns have different lengths");
  }
  if (!pair_ids.empty() && pair_ids.size() != n) {
    fail(ErrorCode::InvalidArgument, "pair_id column length mismatch");
  }
  if (concept_names.size() != concepts.size()) {
    fail(ErrorCode::InvalidArgument, "concept names and columns disagree");
  }
  for (const auto& name : concept_names) {
    const auto& col = concept_column(name);
    if (col.size() != n) fail(ErrorCode::InvalidArgument, "concept '" + name + "' length mismatch");
    for (auto v : col) {
      if (v > 1) fail(ErrorCode::InvalidArgument, "concept '" + name + "' is not binary");
    }
  }
}

LabelTable parse_label_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::ParseError, "label CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "split" ||
      header[2] != "task_label") {
    fail(ErrorCode::ParseError, "label CSV header must start with sample_id,split,task_label");
  }

  LabelTable table;
  std::optional<std::size_t> pair_col;
  std::vector<std::size_t> concept_cols;
  for (std::size_t c = 3; c < header.size(); ++c) {
    if (header[c] == "pair_id") {
      pair_col = c;
    } else {
      if (table.concepts.count(header[c]) != 0) {
        fail(ErrorCode::ParseError, "duplicate column '" + header[c] + "'");
      }
      table.concept_names.push_back(header[c]);
      table.concepts[header[c]] = {};
      concept_cols.push_back(c);
    }
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields");
    }
    table.sample_ids.push_back(fields[0]);
    auto split = parse_split(fields[1]);
    if (!split) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad split '" +
                                      fields[1] + "'");
    }
    table.splits.push_back(*split);
    table.task_labels.push_back(parse_int(fields[2], line_no));
    for (std::size_t k = 0; k < concept_cols.size(); ++k) {
      const int v = parse_int(fields[concept_cols[k]], line_no);
      if (v != 0 && v != 1) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": concept '" +
                                        table.concept_names[k] + "' must be 0/1");
      }
      table.concepts[table.concept_names[k]].push_back(static_cast<std::uint8_t>(v));
    }
    if (pair_col) table.pair_ids.push_back(fields[*pair_col]);
  }
  table.validate();
  return table;
}

LabelTable read_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return parse_label_csv(in);
}

void write_label_csv(const LabelTable& table, std::ostream& out) {
  out << "sample_id,split,task_label";
  for (const auto& name : table.concept_names) out << ',' << name;
  if (table.has_pairs()) out << ",pair_id";
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.sample_ids[i] << ',' << to_string(table.splits[i]) << ','
        << table.task_labels[i];
    for (const auto& name : table.concept_names) {
      out << ',' << static_cast<int>(table.concepts.at(name)[i]);
    }
    if (table.has_pairs()) out << ',' << table.pair_ids[i];
    out << '\n';
  }
}

void write_label_csv(const LabelTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  write_label_csv(table, out);
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace cavkit
