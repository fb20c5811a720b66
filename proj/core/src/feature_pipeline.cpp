#include "dtln/feature_pipeline.hpp"

#include <cmath>

#include "dtln/linalg.hpp"

namespace dtln {

GrayImage pad_same(const GrayImage& image, PatchShape shape) {
    shape.validate();
    const int pr = (shape.k1 - 1) / 2;
    const int pc = (shape.k2 - 1) / 2;
    GrayImage out(image.width + 2 * pc, image.height + 2 * pr, 0.0);
    for (int r = 0; r < image.height; ++r)
        for (int c = 0; c < image.width; ++c) out.at(r + pr, c + pc) = image.at(r, c);
    return out;
}

LayerMapper::LayerMapper(const FilterBank& bank, const WhiteningTransform& whiten,
                         ExtractionOptions opts)
    : shape_(bank.shape), kind_(bank.kind), biases_(bank.biases), opts_(opts) {
    bank.validate();
    shape_.validate();
    if (opts_.preprocess) {
        if (whiten.dim != static_cast<std::size_t>(shape_.dim()))
            throw InvalidArgument("map_layer: whitening dimension does not match filter size");
        filters_ = multiply(bank.weights, whiten.matrix);
    } else {
        filters_ = bank.weights;
    }
}

std::vector<FeatureMap> LayerMapper::map(const FeatureMap& input) const {
    const GrayImage padded = pad_same(input, shape_);
    const std::size_t count = filters_.rows();
    const std::size_t dim = filters_.cols();
    std::vector<FeatureMap> out(count, FeatureMap(input.width, input.height, 0.0));
    std::vector<double> window(dim);

    for (int r = 0; r < input.height; ++r) {
        for (int c = 0; c < input.width; ++c) {
            std::size_t k = 0;
            for (int dr = 0; dr < shape_.k1; ++dr) {
                const double* src = padded.pixels.data() +
                                    static_cast<std::size_t>(r + dr) * padded.width + c;
                for (int dc = 0; dc < shape_.k2; ++dc) window[k++] = src[dc];
            }
            if (opts_.preprocess && opts_.lcn_enabled) lcn_patch(window, window, opts_.lcn);
            for (std::size_t l = 0; l < count; ++l) {
                double v = dot(filters_.row(l), window);
                if (kind_ == LayerKind::Dae) v = std::tanh(v + biases_[l]);
                out[l].at(r, c) = v;
            }
        }
    }
    return out;
}

std::vector<FeatureMap> map_layer(const FeatureMap& input, const FilterBank& bank,
                                  const WhiteningTransform& whiten, const ExtractionOptions& opts) {
    return LayerMapper(bank, whiten, opts).map(input);
}

FeatureMapStack build_stack(const GrayImage& image, const LayerMapper& first,
                            const LayerMapper& second) {
    FeatureMapStack stack;
    stack.width = image.width;
    stack.height = image.height;
    stack.layer1 = first.map(image);
    stack.layer2.reserve(stack.layer1.size());
    for (const auto& map : stack.layer1) stack.layer2.push_back(second.map(map));
    return stack;
}

}  // namespace dtln
