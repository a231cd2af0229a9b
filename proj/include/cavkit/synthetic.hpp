#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cavkit/labels.hpp"
#include "cavkit/matrix.hpp"

namespace cavkit {

// Planted-concept generator. For every concept c and pair index i:
//   clean    = base + noise                (projected off span(concept_dirs)
//                                           when base_orthogonal)
//   infused  = clean + beta * v_c + noise'  (noise' = 0 when noise_sigma = 0)
// The two rows share a pair_id. Task labels are 1 when clean . task_dir > 0;
// the infused row inherits the label of its clean counterpart, except in the
// train split when confound_class >= 0, where infused rows are labelled
// confound_class (a spurious concept -> class shortcut for the task probe).
struct SyntheticSpec {
  std::size_t d = 16;
  std::size_t n_per_side = 200;
  std::vector<std::string> concept_names;
  std::vector<Vector> concept_dirs;
  double beta = 3.0;
  double noise_sigma = 0.0;
  double base_sigma = 1.0;
  bool base_orthogonal = true;
  Vector task_dir;
  int confound_class = -1;
  std::array<double, 3> split_fractions{0.6, 0.2, 0.2};
  std::uint64_t seed = 0;

  // Throws InvalidArgument when an invariant fails.
  void validate() const;
};

// Fills concept_dirs with `count` random unit vectors of pairwise cosine
// `pairwise_cosine` (in [0, 1)), names them concept_0.., and picks a random
// task_dir orthogonal to all of them. Requires d >= count + 2.
void plant_random_directions(SyntheticSpec& spec, std::size_t count, double pairwise_cosine);

struct SyntheticData {
  EmbeddingMatrix embeddings;
  LabelTable labels;
  std::vector<UnitVector> ground_truth;  // one per concept, spec order
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace cavkit
