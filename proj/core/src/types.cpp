#include "dtln/types.hpp"

#include <bit>
#include <cmath>
#include <numeric>

namespace dtln {

GrayImage::GrayImage(int w, int h, double fill) : width(w), height(h) {
    if (w < 1 || h < 1) throw InvalidArgument("image dimensions must be positive");
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

GrayImage::GrayImage(int w, int h, std::vector<double> values)
    : width(w), height(h), pixels(std::move(values)) {
    if (w < 1 || h < 1) throw InvalidArgument("image dimensions must be positive");
    if (pixels.size() != static_cast<std::size_t>(w) * h)
        throw InvalidArgument("pixel count does not match width x height");
}

void PatchShape::validate() const {
    if (k1 < 1 || k2 < 1) throw InvalidArgument("patch sides must be positive");
    if (k1 % 2 == 0 || k2 % 2 == 0) throw InvalidArgument("patch side must be odd");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

PatchMatrix::PatchMatrix(PatchShape shape, std::size_t columns)
    : shape_(shape), columns_(columns), data_(static_cast<std::size_t>(shape.dim()) * columns, 0.0) {
    if (shape.k1 < 1 || shape.k2 < 1) throw InvalidArgument("patch sides must be positive");
}

void FilterBank::validate() const {
    if (weights.cols() != static_cast<std::size_t>(shape.dim()))
        throw InvalidArgument("filter width does not match patch shape");
    if (kind == LayerKind::Dae && biases.size() != weights.rows())
        throw InvalidArgument("DAE bank needs one bias per filter");
    if (kind == LayerKind::Pca && !biases.empty())
        throw InvalidArgument("PCA bank carries no biases");
    for (double v : weights.data())
        if (!std::isfinite(v)) throw InvalidArgument("non-finite filter weight");
    for (double v : biases)
        if (!std::isfinite(v)) throw InvalidArgument("non-finite filter bias");
}

std::size_t FeatureMapStack::encoded_map_count(bool trans_layer) const {
    std::size_t n = trans_layer ? layer1.size() : 0;
    for (const auto& group : layer2) n += group.size();
    return n;
}

int EncoderConfig::l1() const {
    return std::has_single_bit(bins) ? std::countr_zero(bins) : -1;
}

std::uint64_t HistogramFeature::total_count() const {
    return std::accumulate(entries.begin(), entries.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const HistogramEntry& e) { return acc + e.count; });
}

}  // namespace dtln
