#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dtln/rng.hpp"
#include "dtln/types.hpp"

namespace dtln {

/// Top-left corner of a sampled patch inside source `source`.
struct PatchSite {
    std::uint32_t source = 0;
    int row = 0;
    int col = 0;

    friend bool operator==(const PatchSite&, const PatchSite&) = default;
};

struct SourceSize {
    int width = 0;
    int height = 0;
};

/// Draws m sites uniformly over all (source, valid offset) pairs.
std::vector<PatchSite> plan_patch_sites(std::span<const SourceSize> sources, PatchShape shape,
                                        std::size_t m, Rng& rng);

/// Copies the k1 x k2 window with top-left (row, col), row-major, into out.
void gather_patch(const GrayImage& source, PatchShape shape, int row, int col,
                  std::span<double> out);

PatchMatrix sample_patches(std::span<const GrayImage> sources, PatchShape shape, std::size_t m,
                           Rng& rng);

struct PcaFilters {
    FilterBank bank;
    /// Full spectrum of Z Z^T, descending.
    std::vector<double> eigenvalues;
};

/// Top-L eigenvectors of Z Z^T as filter rows.
PcaFilters learn_pca(const PatchMatrix& patches, std::size_t count);
FilterBank learn_pca_filters(const PatchMatrix& patches, std::size_t count);

// ---------------------------------------------------------------------------
// Denoising autoencoder with tied tanh encoder/decoder.
//
// Objective over a patch matrix Z and its corruption Zc:
//   J = C * sum_i || z_i - tanh(W^T tanh(W zc_i + b) + b') ||^2 + ||W||_F^2
// ---------------------------------------------------------------------------

struct DaeTrainConfig {
    double tradeoff_c = 1.0;
    double corruption_rate = 0.1;
    int epochs = 50;
    /// Step size for epoch e (1-based) is learning_rate / sqrt(e).
    double learning_rate = 0.01;
    int minibatch = 256;
    Rng rng{1};

    void validate() const;
};

struct DaeParams {
    Matrix weights;                 // L x D
    std::vector<double> enc_bias;   // L
    std::vector<double> dec_bias;   // D

    /// Weights uniform in +-1/sqrt(D), zero biases.
    static DaeParams random_init(std::size_t count, std::size_t dim, Rng& rng);
};

double dae_objective(const DaeParams& params, const PatchMatrix& clean,
                     const PatchMatrix& corrupted, double tradeoff_c);

/// Analytic gradient of dae_objective, laid out like DaeParams.
DaeParams dae_gradient(const DaeParams& params, const PatchMatrix& clean,
                       const PatchMatrix& corrupted, double tradeoff_c);

/// Zeroes each entry independently with probability `rate`.
PatchMatrix corrupt(const PatchMatrix& patches, double rate, Rng& rng);

struct DaeTrainResult {
    FilterBank bank;
    DaeParams params;
    /// Objective / m on a fixed evaluation corruption, before training and
    /// after every epoch.
    double initial_loss = 0.0;
    std::vector<double> epoch_loss;
    /// Mean squared reconstruction error per entry on clean input.
    std::vector<double> epoch_mse;
};

/// Minibatch SGD on the objective scaled by 1/m. Throws std::runtime_error
/// on a non-finite loss.
DaeTrainResult train_dae(const PatchMatrix& patches, std::size_t count, const DaeTrainConfig& cfg);
FilterBank learn_dae_filters(const PatchMatrix& patches, std::size_t count,
                             const DaeTrainConfig& cfg);

}  // namespace dtln
