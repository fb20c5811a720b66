#include "dtln/preprocess.hpp"

#include <cmath>

#include "dtln/linalg.hpp"

namespace dtln {

void lcn_patch(std::span<const double> patch, std::span<double> out, LcnParams params) {
    const auto n = static_cast<double>(patch.size());
    double mean = 0.0;
    for (double v : patch) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : patch) var += (v - mean) * (v - mean);
    const double denom = std::sqrt(var / n) + params.c;
    for (std::size_t i = 0; i < patch.size(); ++i) out[i] = (patch[i] - mean) / denom;
}

std::vector<double> lcn_patch(std::span<const double> patch, LcnParams params) {
    std::vector<double> out(patch.size());
    lcn_patch(patch, out, params);
    return out;
}

PatchMatrix lcn_matrix(const PatchMatrix& patches, LcnParams params) {
    PatchMatrix out(patches.shape(), patches.columns());
    for (std::size_t i = 0; i < patches.columns(); ++i)
        lcn_patch(patches.column(i), out.column(i), params);
    return out;
}

Matrix sample_covariance(const PatchMatrix& patches) {
    const std::size_t d = patches.dim();
    const std::size_t m = patches.columns();
    if (m < 2) throw InvalidArgument("covariance needs at least two patches");

    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto col = patches.column(i);
        for (std::size_t r = 0; r < d; ++r) mean[r] += col[r];
    }
    for (double& v : mean) v /= static_cast<double>(m);

    // Upper triangle accumulated column by column in a fixed order.
    Matrix cov(d, d);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < m; ++i) {
        const auto col = patches.column(i);
        for (std::size_t r = 0; r < d; ++r) centered[r] = col[r] - mean[r];
        for (std::size_t r = 0; r < d; ++r) {
            const double cr = centered[r];
            auto row = cov.row(r);
            for (std::size_t c = r; c < d; ++c) row[c] += cr * centered[c];
        }
    }
    const double scale = 1.0 / static_cast<double>(m - 1);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = r; c < d; ++c) cov(c, r) = cov(r, c) = cov(r, c) * scale;
    return cov;
}

WhiteningTransform whiten_fit(const PatchMatrix& patches, double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidArgument("whitening epsilon must be non-negative");
    const Matrix cov = sample_covariance(patches);
    const SymmetricEigen eig = jacobi_eigen(cov);
    const std::size_t d = cov.rows();

    const double largest = eig.values.empty() ? 0.0 : eig.values.front() + epsilon;
    std::vector<double> scale(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        const double energy = eig.values[k] + epsilon;
        if (energy > 1e-12 * largest && energy > 0.0) scale[k] = 1.0 / std::sqrt(energy);
    }

    WhiteningTransform t;
    t.dim = d;
    t.epsilon = epsilon;
    t.matrix = Matrix(d, d);
    for (std::size_t k = 0; k < d; ++k) {
        if (scale[k] == 0.0) continue;
        const auto u = eig.vectors.row(k);
        for (std::size_t r = 0; r < d; ++r) {
            const double ur = u[r] * scale[k];
            auto row = t.matrix.row(r);
            for (std::size_t c = 0; c < d; ++c) row[c] += ur * u[c];
        }
    }
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = r + 1; c < d; ++c)
            t.matrix(r, c) = t.matrix(c, r) = 0.5 * (t.matrix(r, c) + t.matrix(c, r));
    return t;
}

PatchMatrix whiten_apply(const WhiteningTransform& transform, const PatchMatrix& patches) {
    if (transform.dim != patches.dim() || transform.matrix.rows() != transform.dim)
        throw InvalidArgument("whiten_apply: transform dimension " + std::to_string(transform.dim) +
                              " does not match patch dimension " + std::to_string(patches.dim()));
    PatchMatrix out(patches.shape(), patches.columns());
    for (std::size_t i = 0; i < patches.columns(); ++i) {
        const auto in = patches.column(i);
        auto dst = out.column(i);
        for (std::size_t r = 0; r < transform.dim; ++r) dst[r] = dot(transform.matrix.row(r), in);
    }
    return out;
}

}  // namespace dtln
