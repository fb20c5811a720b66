#pragma once

// Shared value types for the trans-layer feature pipeline.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dtln {

/// Thrown when arguments violate a documented precondition.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Real-valued 2-D grid stored row-major. Input images hold values in
/// [0,1]; feature maps reuse the same type with arbitrary finite values.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, double fill = 0.0);
    GrayImage(int w, int h, std::vector<double> values);

    double at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    std::size_t size() const { return pixels.size(); }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

using FeatureMap = GrayImage;

struct LabeledImages {
    std::vector<GrayImage> images;
    std::vector<int> labels;

    std::size_t size() const { return images.size(); }
};

/// Receptive field of k1 rows by k2 columns. Both sides odd.
struct PatchShape {
    int k1 = 7;
    int k2 = 7;

    int dim() const { return k1 * k2; }
    void validate() const;

    friend bool operator==(const PatchShape&, const PatchShape&) = default;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix transposed() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Patches stacked as columns: column i is the row-major flattening of
/// patch i. Each column is stored contiguously.
class PatchMatrix {
public:
    PatchMatrix() = default;
    PatchMatrix(PatchShape shape, std::size_t columns);

    const PatchShape& shape() const { return shape_; }
    std::size_t dim() const { return static_cast<std::size_t>(shape_.dim()); }
    std::size_t columns() const { return columns_; }

    std::span<const double> column(std::size_t i) const { return {data_.data() + i * dim(), dim()}; }
    std::span<double> column(std::size_t i) { return {data_.data() + i * dim(), dim()}; }

    double operator()(std::size_t row, std::size_t col) const { return data_[col * dim() + row]; }
    double& operator()(std::size_t row, std::size_t col) { return data_[col * dim() + row]; }

    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const PatchMatrix&, const PatchMatrix&) = default;

private:
    PatchShape shape_{};
    std::size_t columns_ = 0;
    std::vector<double> data_;
};

enum class LayerKind : std::uint8_t { Pca = 0, Dae = 1 };

/// Learned filters of one layer. Row l of `weights` is filter l flattened
/// row-major over a k1 x k2 window. Biases are present only for DAE banks.
struct FilterBank {
    LayerKind kind = LayerKind::Pca;
    PatchShape shape{};
    Matrix weights;
    std::vector<double> biases;

    std::size_t count() const { return weights.rows(); }
    void validate() const;

    friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

/// Symmetric ZCA operator U (D + eps I)^{-1/2} U^T.
struct WhiteningTransform {
    std::size_t dim = 0;
    double epsilon = 0.1;
    Matrix matrix;

    friend bool operator==(const WhiteningTransform&, const WhiteningTransform&) = default;
};

/// First-layer maps plus the second-layer maps computed from each of them;
/// layer2[i][j] is filter j of the second bank applied to layer1[i].
struct FeatureMapStack {
    int width = 0;
    int height = 0;
    std::vector<FeatureMap> layer1;
    std::vector<std::vector<FeatureMap>> layer2;

    /// Number of maps that reach the encoder.
    std::size_t encoded_map_count(bool trans_layer) const;
};

struct EncoderConfig {
    int block_w = 7;
    int block_h = 7;
    int stride_x = 3;
    int stride_y = 3;
    std::uint32_t bins = 256;
    bool trans_layer = true;
    bool lcn_enabled = true;

    int l1() const;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct HistogramEntry {
    std::uint32_t index = 0;
    std::uint32_t count = 0;

    friend bool operator==(const HistogramEntry&, const HistogramEntry&) = default;
};

/// Concatenated block histograms, stored sparsely with ascending indices.
struct HistogramFeature {
    std::size_t dim = 0;
    std::vector<HistogramEntry> entries;

    std::uint64_t total_count() const;

    friend bool operator==(const HistogramFeature&, const HistogramFeature&) = default;
};

}  // namespace dtln
