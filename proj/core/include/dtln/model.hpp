#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dtln/classify.hpp"
#include "dtln/config.hpp"
#include "dtln/encode.hpp"
#include "dtln/feature_pipeline.hpp"
#include "dtln/filter_learn.hpp"
#include "dtln/types.hpp"

namespace dtln {

using Classifier = std::variant<LinearSvmModel, WpcaCosineModel>;

/// Everything needed to turn an image into a prediction.
struct TrainedModel {
    Config config;
    FilterBank bank1;
    WhiteningTransform whiten1;
    FilterBank bank2;
    WhiteningTransform whiten2;
    EncoderConfig encoder;
    Classifier classifier;

    /// Throws InvalidArgument when stages disagree on shapes or counts.
    void validate() const;

    friend bool operator==(const TrainedModel&, const TrainedModel&) = default;
};

ExtractionOptions extraction_options(const Config& config);

/// Reusable image -> feature path for one model.
class FeatureExtractor {
public:
    FeatureExtractor(const FilterBank& bank1, const WhiteningTransform& whiten1,
                     const FilterBank& bank2, const WhiteningTransform& whiten2,
                     const EncoderConfig& encoder, const ExtractionOptions& options);
    explicit FeatureExtractor(const TrainedModel& model);

    const LayerMapper& first() const { return first_; }
    const LayerMapper& second() const { return second_; }

    FeatureMapStack stack(const GrayImage& image) const;
    std::vector<CodeMap> code_maps(const GrayImage& image) const;
    HistogramFeature feature(const GrayImage& image) const;

    /// Feature dimension for an image of the given size.
    std::size_t feature_dim(int width, int height) const;

private:
    LayerMapper first_;
    LayerMapper second_;
    EncoderConfig encoder_;
};

FeatureMapStack build_stack(const GrayImage& image, const TrainedModel& model);
HistogramFeature extract_feature(const GrayImage& image, const TrainedModel& model);

using LogFn = std::function<void(const std::string&)>;

struct LayerReport {
    double sample_seconds = 0.0;
    double learn_seconds = 0.0;
    /// Full PCA spectrum (PCA learner only).
    std::vector<double> spectrum;
    /// max |W W^T - I| (PCA learner only).
    double orthonormality_error = 0.0;
    std::optional<double> dae_initial_loss;
    std::vector<double> dae_epoch_loss;
};

struct TrainReport {
    LayerReport layer1;
    LayerReport layer2;
    double feature_seconds = 0.0;
    double classifier_seconds = 0.0;
    std::size_t feature_dim = 0;
    std::size_t feature_nonzeros = 0;
    std::vector<SvmClassReport> svm;
};

struct TrainOptions {
    unsigned jobs = 1;
    LogFn log;
};

/// Unsupervised filter learning for both layers; the returned model has
/// no classifier yet.
TrainedModel learn_feature_layers(const LabeledImages& data, const Config& config,
                                  const TrainOptions& options, TrainReport* report = nullptr);

/// Extracts features for every image (input order preserved).
SparseMatrix extract_features(const FeatureExtractor& extractor, std::span<const GrayImage> images,
                              unsigned jobs);

/// Full training: both layers, feature extraction, classifier.
TrainedModel train_model(const LabeledImages& data, const Config& config,
                         const TrainOptions& options, TrainReport* report = nullptr);

int predict(const TrainedModel& model, const HistogramFeature& feature);

/// Predicts every image (input order preserved).
std::vector<int> predict_all(const TrainedModel& model, std::span<const GrayImage> images,
                             unsigned jobs);

}  // namespace dtln
