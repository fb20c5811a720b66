#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dtln/types.hpp"

namespace dtln {

class EigenNonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigenpairs of a symmetric matrix. `vectors` holds one eigenvector per
/// row, ordered by descending eigenvalue.
struct SymmetricEigen {
    std::vector<double> values;
    Matrix vectors;
};

struct JacobiOptions {
    /// Stop once the off-diagonal Frobenius norm falls below
    /// `tolerance * max(1, ||A||_F)`.
    double tolerance = 1e-12;
    int max_sweeps = 100;
};

/// Cyclic Jacobi eigendecomposition. Each eigenvector's sign is fixed so
/// that its largest-magnitude entry (first one on ties) is positive.
/// Throws EigenNonConvergence when the sweep cap is hit.
SymmetricEigen jacobi_eigen(const Matrix& symmetric, JacobiOptions opts = {});

/// Flips `v` so its largest-magnitude entry is positive.
void fix_sign(std::span<double> v);

double dot(std::span<const double> a, std::span<const double> b);

/// A * A^T for a row-major A.
Matrix gram_rows(const Matrix& a);

/// A * B.
Matrix multiply(const Matrix& a, const Matrix& b);

/// max_ij |A_ij - B_ij|.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace dtln
