#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtln/rng.hpp"
#include "dtln/types.hpp"

namespace dtln {

struct SparseRow {
    std::span<const std::uint32_t> index;
    std::span<const float> value;
};

/// Compressed sparse rows; column indices are 0-based and ascending.
/// Values are kept in single precision (8 bytes per entry), which holds
/// histogram counts exactly.
class SparseMatrix {
public:
    explicit SparseMatrix(std::size_t cols = 0) : cols_(cols) { offsets_.push_back(0); }

    void add_row(const HistogramFeature& feature);
    void add_row(std::span<const std::pair<std::uint32_t, double>> entries);
    void add_dense_row(std::span<const double> values);

    std::size_t rows() const { return offsets_.size() - 1; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return index_.size(); }

    SparseRow row(std::size_t r) const {
        const auto b = offsets_[r];
        const auto n = offsets_[r + 1] - b;
        return {{index_.data() + b, n}, {value_.data() + b, n}};
    }

    void reserve(std::size_t rows, std::size_t nonzeros);

private:
    std::size_t cols_;
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> index_;
    std::vector<float> value_;
};

/// One-vs-rest linear SVM. Row c of `weights` and bias[c] score class
/// classes[c]; classes are ascending.
struct LinearSvmModel {
    std::vector<int> classes;
    Matrix weights;
    std::vector<double> bias;
    double cost_c = 1.0;

    std::size_t dim() const { return weights.cols(); }

    friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

struct SvmOptions {
    double cost_c = 1.0;
    /// Stop when max - min projected gradient over a pass is at most this.
    double tolerance = 0.1;
    int max_passes = 1000;
    std::uint64_t seed = 1;
    /// Worker threads for the per-class problems (0 = hardware concurrency).
    unsigned jobs = 1;
};

struct SvmClassReport {
    int passes = 0;
    bool converged = false;
    /// Dual objective 0.5 ||w||^2 - sum(alpha) after every pass.
    std::vector<double> dual_objective;
};

struct SvmTrainResult {
    LinearSvmModel model;
    std::vector<SvmClassReport> reports;
};

/// L2-regularized L1-hinge dual coordinate descent with shrinking, one
/// binary problem per class. The bias is learned as the weight of an
/// implicit constant feature of value 1.
SvmTrainResult svm_train(const SparseMatrix& features, std::span<const int> labels,
                         const SvmOptions& options);

std::vector<double> svm_decision_values(const LinearSvmModel& model, SparseRow x);

/// argmax_c <w_c, x> + b_c; ties go to the smallest label. Indices at or
/// beyond the model dimension are ignored.
int svm_predict(const LinearSvmModel& model, SparseRow x);
int svm_predict(const LinearSvmModel& model, const HistogramFeature& x);

/// Whitened PCA: projection rows are principal directions divided by the
/// square root of their variance.
struct WpcaModel {
    std::vector<double> mean;
    Matrix projection;  // target_dim x feature_dim

    friend bool operator==(const WpcaModel&, const WpcaModel&) = default;
};

/// Fits on the rows of `samples`. Components with variance at or below
/// 1e-10 of the largest are unavailable; asking for more than remain
/// throws InvalidArgument. Uses the feature covariance when dim <= n and
/// the n x n Gram matrix otherwise.
WpcaModel wpca_fit(const Matrix& samples, std::size_t target_dim);
std::vector<double> wpca_apply(const WpcaModel& model, std::span<const double> x);
std::vector<double> wpca_apply(const WpcaModel& model, SparseRow x);

/// Label of the training row with the largest cosine similarity to the
/// query; ties go to the lowest row. Zero training rows never match.
int cosine_nn(const Matrix& train, std::span<const int> labels, std::span<const double> query);

struct WpcaCosineModel {
    WpcaModel wpca;
    bool sqrt_features = false;
    Matrix train_projected;
    std::vector<int> labels;

    friend bool operator==(const WpcaCosineModel&, const WpcaCosineModel&) = default;
};

}  // namespace dtln
