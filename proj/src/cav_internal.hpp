#pragma once

#include "cavkit/cav.hpp"

namespace cavkit::cav::detail {

// Normalized Cav with the dataset bookkeeping filled in. Throws ZeroNorm.
Cav make_cav(std::span<const double> raw, MethodId method, const ConceptDataset& D);

// CV seed shared by every linear fit on D, so all methods see the same folds.
std::uint64_t cv_seed(const ConceptDataset& D);

struct LinearDirection {
  Vector weights;  // raw feature space, intercept dropped
  double C = 0.0;
};

// Tunes C by cross-validation, then refits on all of X.
LinearDirection fit_linear_direction(const Matrix& X, std::span<const int> y,
                                     probes::SolverKind kind, const ExtractOptions& options,
                                     std::uint64_t seed);

}  // namespace cavkit::cav::detail
