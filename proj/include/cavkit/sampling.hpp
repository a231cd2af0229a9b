#pragma once

#include <cstdint>
#include <string>

#include "cavkit/labels.hpp"
#include "cavkit/matrix.hpp"

namespace cavkit {

// Default balanced sample size per side.
inline constexpr std::size_t kDefaultSamplesPerSide = 500;

enum class Pairing : std::uint8_t { unpaired, counterfactual };

enum class SamplingStrategy : std::uint8_t { random_balanced, paired_counterfactual, stratified };

struct SamplingRequest {
  std::string concept_name;
  std::size_t n_per_side = kDefaultSamplesPerSide;
  std::uint64_t seed = 0;
  SamplingStrategy strategy = SamplingStrategy::random_balanced;
  std::string group_key;  // column for the stratified strategy
  Split split = Split::train;  // extraction always samples train; evaluation sets use val/test
};

// The binary dataset for one concept. When pairing is counterfactual,
// positives[i] and negatives[i] are the two members of one pair.
struct ConceptDataset {
  std::string concept_name;
  IndexSet positives;
  IndexSet negatives;
  Pairing pairing = Pairing::unpaired;
  std::size_t n_per_side = 0;
  bool clamped = false;  // fewer than the requested samples were available
  std::uint64_t seed = 0;

  // positives followed by negatives
  IndexSet rows() const;
  // 1 for each positive, 0 for each negative, aligned with rows()
  std::vector<int> labels() const;

  // Throws InvalidArgument when the sides overlap or the pairing is not a
  // bijection.
  void validate() const;
};

// Draws without replacement from request.split (train unless overridden). Throws UnknownConcept,
// NoPairMapping (paired strategy on a table without pairs) and
// EmptySelection (no candidates on a side).
ConceptDataset sample_concept_sets(const LabelTable& labels, const SamplingRequest& request);

std::uint64_t hash_name(std::string_view name);

}  // namespace cavkit
