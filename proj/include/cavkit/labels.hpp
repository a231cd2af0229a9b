#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cavkit/matrix.hpp"

namespace cavkit {

enum class Split : std::uint8_t { train, val, test };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

// Row-aligned annotations for an embedding matrix. CSV layout:
//   sample_id,split,task_label,<concept_1>,...,<concept_k>[,pair_id]
// Concept columns hold 0/1. Rows sharing a non-empty pair_id form a
// counterfactual pair.
struct LabelTable {
  std::vector<std::string> sample_ids;
  std::vector<Split> splits;
  std::vector<int> task_labels;
  std::vector<std::string> concept_names;  // CSV column order
  std::map<std::string, std::vector<std::uint8_t>> concepts;
  std::vector<std::string> pair_ids;  // empty when the table carries no pair column

  std::size_t size() const noexcept { return sample_ids.size(); }
  bool has_pairs() const noexcept { return !pair_ids.empty(); }

  // Throws UnknownConcept.
  const std::vector<std::uint8_t>& concept_column(const std::string& name) const;

  // "task_label" or any concept column, as integers. Throws UnknownConcept.
  std::vector<int> integer_column(const std::string& name) const;

  IndexSet rows_in(Split split) const;

  // Throws InvalidArgument on ragged columns or non-binary concept values.
  void validate() const;
};

LabelTable parse_label_csv(std::istream& in);
LabelTable read_label_csv(const std::filesystem::path& path);
void write_label_csv(const LabelTable& table, std::ostream& out);
void write_label_csv(const LabelTable& table, const std::filesystem::path& path);

}  // namespace cavkit
