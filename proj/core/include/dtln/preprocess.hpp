#pragma once

#include <span>
#include <vector>

#include "dtln/types.hpp"

namespace dtln {

/// Local contrast normalization: (x - mean) / (population_std + c).
struct LcnParams {
    double c = 10.0;
};

void lcn_patch(std::span<const double> patch, std::span<double> out, LcnParams params);
std::vector<double> lcn_patch(std::span<const double> patch, LcnParams params);

/// Applies lcn_patch to every column independently.
PatchMatrix lcn_matrix(const PatchMatrix& patches, LcnParams params);

/// Fits U (D + eps I)^{-1/2} U^T from the sample covariance (1/(m-1),
/// column mean removed) of the patch columns. Directions whose
/// D + eps is numerically zero (below 1e-12 of the largest) are dropped
/// instead of amplified. Requires at least two columns.
WhiteningTransform whiten_fit(const PatchMatrix& patches, double epsilon);

/// Multiplies every column by the stored transform. No mean is removed.
PatchMatrix whiten_apply(const WhiteningTransform& transform, const PatchMatrix& patches);

/// Sample covariance of the columns (1/(m-1), column mean removed).
Matrix sample_covariance(const PatchMatrix& patches);

}  // namespace dtln
