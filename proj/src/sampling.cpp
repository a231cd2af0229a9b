#include "cavkit/sampling.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "cavkit/error.hpp"
#include "cavkit/rng.hpp"

namespace cavkit {
namespace {

IndexSet take_sorted(IndexSet pool, std::size_t n, Rng& rng) {
  rng.shuffle(std::span<std::size_t>(pool));
  pool.resize(std::min(n, pool.size()));
  std::sort(pool.begin(), pool.end());
  return pool;
}

int majority_value(const std::vector<int>& column, const IndexSet& rows) {
  std::map<int, std::size_t> counts;
  for (std::size_t r : rows) ++counts[column[r]];
  int best = 0;
  std::size_t best_count = 0;
  for (const auto& [value, count] : counts) {  // ascending, so ties keep the smaller value
    if (count > best_count) {
      best = value;
      best_count = count;
    }
  }
  return best;
}

}  // namespace

std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

IndexSet ConceptDataset::rows() const {
  IndexSet out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  return out;
}

std::vector<int> ConceptDataset::labels() const {
  std::vector<int> out(positives.size(), 1);
  out.resize(positives.size() + negatives.size(), 0);
  return out;
}

void ConceptDataset::validate() const {
  std::set<std::size_t> pos(positives.begin(), positives.end());
  for (std::size_t r : negatives) {
    if (pos.count(r) != 0) fail(ErrorCode::InvalidArgument, "positive and negative sets overlap");
  }
  if (pairing == Pairing::counterfactual) {
    std::set<std::size_t> neg(negatives.begin(), negatives.end());
    if (positives.size() != negatives.size() || pos.size() != positives.size() ||
        neg.size() != negatives.size()) {
      fail(ErrorCode::InvalidArgument, "counterfactual pairing is not a bijection");
    }
  }
}

ConceptDataset sample_concept_sets(const LabelTable& labels, const SamplingRequest& request) {
  const auto& column = labels.concept_column(request.concept_name);
  const IndexSet train = labels.rows_in(request.split);
  Rng rng(mix_seed(request.seed, hash_name(request.concept_name)));

  ConceptDataset out;
  out.concept_name = request.concept_name;
  out.seed = request.seed;

  IndexSet pos_pool;
  IndexSet neg_pool;
  for (std::size_t r : train) (column[r] ? pos_pool : neg_pool).push_back(r);

  switch (request.strategy) {
    case SamplingStrategy::random_balanced:
      break;
    case SamplingStrategy::stratified: {
      const std::vector<int> group = labels.integer_column(request.group_key);
      if (pos_pool.empty()) break;
      const int majority = majority_value(group, pos_pool);
      auto other_group = [&](std::size_t r) { return group[r] != majority; };
      std::erase_if(pos_pool, other_group);
      std::erase_if(neg_pool, other_group);
      break;
    }
    case SamplingStrategy::paired_counterfactual: {
      if (!labels.has_pairs()) {
        fail(ErrorCode::NoPairMapping, "paired sampling requested but the table has no pair_id");
      }
      std::map<std::string, IndexSet> members;
      for (std::size_t r : train) {
        if (!labels.pair_ids[r].empty()) members[labels.pair_ids[r]].push_back(r);
      }
      std::vector<std::pair<std::size_t, std::size_t>> pairs;
      for (const auto& [id, rows] : members) {
        if (rows.size() != 2 || column[rows[0]] == column[rows[1]]) continue;
        pairs.emplace_back(column[rows[0]] ? rows[0] : rows[1], column[rows[0]] ? rows[1] : rows[0]);
      }
      if (pairs.empty()) fail(ErrorCode::EmptySelection, "no counterfactual pairs for concept");
      std::sort(pairs.begin(), pairs.end());
      rng.shuffle(std::span(pairs));
      const std::size_t n = std::min(request.n_per_side, pairs.size());
      pairs.resize(n);
      std::sort(pairs.begin(), pairs.end());
      for (const auto& [p, q] : pairs) {
        out.positives.push_back(p);
        out.negatives.push_back(q);
      }
      out.pairing = Pairing::counterfactual;
      out.n_per_side = n;
      out.clamped = n < request.n_per_side;
      return out;
    }
  }

  if (pos_pool.empty() || neg_pool.empty()) {
    fail(ErrorCode::EmptySelection, "concept '" + request.concept_name +
                                        "' has no train samples on one side");
  }
  const std::size_t n = std::min({request.n_per_side, pos_pool.size(), neg_pool.size()});
  out.positives = take_sorted(std::move(pos_pool), n, rng);
  out.negatives = take_sorted(std::move(neg_pool), n, rng);
  out.n_per_side = n;
  out.clamped = n < request.n_per_side;
  return out;
}

}  // namespace cavkit
