#pragma once

#include <vector>

#include "dtln/preprocess.hpp"
#include "dtln/types.hpp"

namespace dtln {

/// Zero border of (k1-1)/2 rows and (k2-1)/2 columns on each side.
GrayImage pad_same(const GrayImage& image, PatchShape shape);

struct ExtractionOptions {
    /// Normalize and whiten every window before the filters are applied.
    bool preprocess = true;
    /// LCN step of the window preprocessing (whitening always applies when
    /// `preprocess` is set).
    bool lcn_enabled = true;
    LcnParams lcn{};
};

/// Applies one filter bank to whole maps with "same" zero padding.
///
/// Responses are sliding-window correlations (no kernel flip). With
/// preprocessing on, each window x becomes w . M lcn(x), where M is the
/// layer's whitening matrix; since M is symmetric this is evaluated as
/// (M w) . lcn(x) with M w folded once at construction. DAE banks add the
/// bias and apply tanh.
class LayerMapper {
public:
    LayerMapper(const FilterBank& bank, const WhiteningTransform& whiten, ExtractionOptions opts);

    std::size_t count() const { return filters_.rows(); }
    const PatchShape& shape() const { return shape_; }

    std::vector<FeatureMap> map(const FeatureMap& input) const;

private:
    PatchShape shape_;
    LayerKind kind_;
    Matrix filters_;
    std::vector<double> biases_;
    ExtractionOptions opts_;
};

std::vector<FeatureMap> map_layer(const FeatureMap& input, const FilterBank& bank,
                                  const WhiteningTransform& whiten, const ExtractionOptions& opts);

/// layer1 = first bank on the image; layer2[i] = second bank on layer1[i].
FeatureMapStack build_stack(const GrayImage& image, const LayerMapper& first,
                            const LayerMapper& second);

}  // namespace dtln
