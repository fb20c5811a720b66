#include "dtln/model.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "dtln/linalg.hpp"
#include "dtln/parallel.hpp"
#include "dtln/preprocess.hpp"

namespace dtln {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void say(const TrainOptions& opt, const std::string& msg) {
    if (opt.log) opt.log(msg);
}

double orthonormality_error(const Matrix& w) {
    return max_abs_diff(gram_rows(w), Matrix::identity(w.rows()));
}

struct LearnedLayer {
    FilterBank bank;
    WhiteningTransform whiten;
};

// LCN, whitening fit/apply and filter learning on one layer's raw patches.
LearnedLayer learn_layer(PatchMatrix patches, const Config& cfg, std::size_t count,
                         const Rng& rng, const std::string& name, const TrainOptions& opt,
                         LayerReport& report) {
    const auto start = Clock::now();
    if (cfg.lcn) patches = lcn_matrix(patches, LcnParams{cfg.lcn_c});
    LearnedLayer out;
    out.whiten = whiten_fit(patches, cfg.whiten_epsilon);
    patches = whiten_apply(out.whiten, patches);

    if (cfg.learner == Learner::Pca) {
        auto pca = learn_pca(patches, count);
        out.bank = std::move(pca.bank);
        report.spectrum = std::move(pca.eigenvalues);
        report.orthonormality_error = orthonormality_error(out.bank.weights);
        std::ostringstream ss;
        ss << name << ": PCA spectrum";
        for (std::size_t k = 0; k < std::min<std::size_t>(report.spectrum.size(), count + 4); ++k)
            ss << ' ' << report.spectrum[k];
        ss << (report.spectrum.size() > count + 4 ? " ..." : "");
        say(opt, ss.str());
        ss.str("");
        ss << name << ": orthonormality max|WW^T-I| = " << report.orthonormality_error;
        say(opt, ss.str());
    } else {
        DaeTrainConfig dae;
        dae.tradeoff_c = cfg.dae_tradeoff_c;
        dae.corruption_rate = cfg.dae_corruption;
        dae.epochs = cfg.dae_epochs;
        dae.learning_rate = cfg.dae_lr;
        dae.minibatch = cfg.dae_minibatch;
        dae.rng = rng;
        auto result = train_dae(patches, count, dae);
        report.dae_initial_loss = result.initial_loss;
        report.dae_epoch_loss = result.epoch_loss;
        std::ostringstream ss;
        ss << name << ": DAE loss " << result.initial_loss << " -> " << result.epoch_loss.back();
        say(opt, ss.str());
        out.bank = std::move(result.bank);
    }
    report.learn_seconds = seconds_since(start);
    return out;
}

}  // namespace

void TrainedModel::validate() const {
    const PatchShape shape = config.patch_shape();
    shape.validate();
    bank1.validate();
    bank2.validate();
    if (!(bank1.shape == shape) || !(bank2.shape == shape))
        throw InvalidArgument("model: filter shape does not match config");
    if (bank1.count() != static_cast<std::size_t>(config.l1) ||
        bank2.count() != static_cast<std::size_t>(config.l2))
        throw InvalidArgument("model: filter counts do not match config");
    if (encoder.bins != (std::uint32_t{1} << bank1.count()))
        throw InvalidArgument("model: encoder bins must equal 2^L1");
    if (whiten1.dim != static_cast<std::size_t>(shape.dim()) ||
        whiten2.dim != static_cast<std::size_t>(shape.dim()))
        throw InvalidArgument("model: whitening dimension does not match patch shape");
}

ExtractionOptions extraction_options(const Config& config) {
    return {config.preprocess_at_extraction, config.lcn, LcnParams{config.lcn_c}};
}

FeatureExtractor::FeatureExtractor(const FilterBank& bank1, const WhiteningTransform& whiten1,
                                   const FilterBank& bank2, const WhiteningTransform& whiten2,
                                   const EncoderConfig& encoder, const ExtractionOptions& options)
    : first_(bank1, whiten1, options), second_(bank2, whiten2, options), encoder_(encoder) {}

FeatureExtractor::FeatureExtractor(const TrainedModel& model)
    : FeatureExtractor(model.bank1, model.whiten1, model.bank2, model.whiten2, model.encoder,
                       extraction_options(model.config)) {}

FeatureMapStack FeatureExtractor::stack(const GrayImage& image) const {
    return build_stack(image, first_, second_);
}

std::vector<CodeMap> FeatureExtractor::code_maps(const GrayImage& image) const {
    return compress_groups(binarize(stack(image)), encoder_.trans_layer);
}

HistogramFeature FeatureExtractor::feature(const GrayImage& image) const {
    const auto maps = code_maps(image);
    return feature_of(maps, encoder_);
}

std::size_t FeatureExtractor::feature_dim(int width, int height) const {
    const std::size_t groups = second_.count() + (encoder_.trans_layer ? 1 : 0);
    return groups * partition_blocks(width, height, encoder_).size() * encoder_.bins;
}

FeatureMapStack build_stack(const GrayImage& image, const TrainedModel& model) {
    return FeatureExtractor(model).stack(image);
}

HistogramFeature extract_feature(const GrayImage& image, const TrainedModel& model) {
    return FeatureExtractor(model).feature(image);
}

TrainedModel learn_feature_layers(const LabeledImages& data, const Config& config,
                                  const TrainOptions& opt, TrainReport* report_out) {
    if (data.images.empty()) throw InvalidArgument("training set has no samples");
    const int width = data.images.front().width;
    const int height = data.images.front().height;
    for (const auto& img : data.images)
        if (img.width != width || img.height != height)
            throw InvalidArgument("training images must share one size");
    if (const auto errors = validate_config(config, width, height); !errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw InvalidArgument(msg);
    }

    TrainReport local;
    TrainReport& report = report_out ? *report_out : local;
    const Rng root(config.seed);
    const PatchShape shape = config.patch_shape();
    const std::size_t m = config.patches_per_layer;
    const auto l1 = static_cast<std::size_t>(config.l1);
    const auto l2 = static_cast<std::size_t>(config.l2);

    TrainedModel model;
    model.config = config;
    model.encoder = config.encoder();

    // First layer: patches straight from the images.
    auto start = Clock::now();
    Rng sample1 = root.stream("layer1/sample");
    PatchMatrix patches1 = sample_patches(data.images, shape, m, sample1);
    report.layer1.sample_seconds = seconds_since(start);
    say(opt, "layer1: sampled " + std::to_string(m) + " patches");
    auto layer1 = learn_layer(std::move(patches1), config, l1, root.stream("layer1/dae"), "layer1",
                              opt, report.layer1);
    model.bank1 = std::move(layer1.bank);
    model.whiten1 = std::move(layer1.whiten);

    // Second layer: patches from the first-layer maps of the training images.
    // Only images that are actually hit get mapped.
    start = Clock::now();
    const LayerMapper first(model.bank1, model.whiten1, extraction_options(config));
    std::vector<SourceSize> sources(data.images.size() * l1, SourceSize{width, height});
    Rng sample2 = root.stream("layer2/sample");
    const auto sites = plan_patch_sites(sources, shape, m, sample2);
    std::vector<std::vector<std::size_t>> by_image(data.images.size());
    for (std::size_t s = 0; s < sites.size(); ++s) by_image[sites[s].source / l1].push_back(s);

    PatchMatrix patches2(shape, m);
    parallel_for(data.images.size(), opt.jobs, [&](std::size_t img) {
        if (by_image[img].empty()) return;
        const auto maps = first.map(data.images[img]);
        for (std::size_t s : by_image[img]) {
            const auto& site = sites[s];
            gather_patch(maps[site.source % l1], shape, site.row, site.col, patches2.column(s));
        }
    });
    report.layer2.sample_seconds = seconds_since(start);
    say(opt, "layer2: sampled " + std::to_string(m) + " patches from first-layer maps");
    auto layer2 = learn_layer(std::move(patches2), config, l2, root.stream("layer2/dae"), "layer2",
                              opt, report.layer2);
    model.bank2 = std::move(layer2.bank);
    model.whiten2 = std::move(layer2.whiten);
    return model;
}

SparseMatrix extract_features(const FeatureExtractor& extractor, std::span<const GrayImage> images,
                              unsigned jobs) {
    SparseMatrix out(images.empty() ? 0 : extractor.feature_dim(images[0].width, images[0].height));
    constexpr std::size_t chunk = 512;
    std::vector<HistogramFeature> buffer;
    for (std::size_t start = 0; start < images.size(); start += chunk) {
        const std::size_t n = std::min(chunk, images.size() - start);
        buffer.assign(n, HistogramFeature{});
        parallel_for(n, jobs, [&](std::size_t i) { buffer[i] = extractor.feature(images[start + i]); });
        if (start == 0) {
            // Size the arrays once from the first chunk so the large final
            // matrix is not reallocated (and transiently duplicated) while growing.
            std::size_t nz = 0;
            for (const auto& f : buffer) nz += f.entries.size();
            const double per_row = static_cast<double>(nz) / static_cast<double>(n);
            out.reserve(images.size(), static_cast<std::size_t>(per_row * 1.1 * static_cast<double>(images.size())));
        }
        for (const auto& f : buffer) out.add_row(f);
    }
    return out;
}

TrainedModel train_model(const LabeledImages& data, const Config& config, const TrainOptions& opt,
                         TrainReport* report_out) {
    TrainReport local;
    TrainReport& report = report_out ? *report_out : local;
    TrainedModel model = learn_feature_layers(data, config, opt, &report);

    auto start = Clock::now();
    const FeatureExtractor extractor(model);
    SparseMatrix features = extract_features(extractor, data.images, opt.jobs);
    report.feature_seconds = seconds_since(start);
    report.feature_dim = features.cols();
    report.feature_nonzeros = features.nonzeros();
    say(opt, "features: dim " + std::to_string(features.cols()) + ", " +
                 std::to_string(features.nonzeros()) + " nonzeros over " +
                 std::to_string(features.rows()) + " samples");

    start = Clock::now();
    if (config.classifier == ClassifierKind::Svm) {
        SvmOptions svm;
        svm.cost_c = config.svm_c;
        svm.seed = Rng(config.seed).stream("svm").seed();
        svm.jobs = opt.jobs;
        auto result = svm_train(features, data.labels, svm);
        report.svm = std::move(result.reports);
        int max_passes = 0;
        for (const auto& r : report.svm) max_passes = std::max(max_passes, r.passes);
        say(opt, "svm: " + std::to_string(report.svm.size()) + " one-vs-rest problems, at most " +
                     std::to_string(max_passes) + " passes");
        model.classifier = std::move(result.model);
    } else {
        WpcaCosineModel wc;
        wc.sqrt_features = config.wpca_sqrt;
        Matrix dense(features.rows(), features.cols());
        for (std::size_t i = 0; i < features.rows(); ++i) {
            const auto row = features.row(i);
            for (std::size_t k = 0; k < row.index.size(); ++k)
                dense(i, row.index[k]) = wc.sqrt_features ? std::sqrt(row.value[k]) : row.value[k];
        }
        wc.wpca = wpca_fit(dense, static_cast<std::size_t>(config.wpca_dim));
        wc.train_projected = Matrix(dense.rows(), wc.wpca.projection.rows());
        for (std::size_t i = 0; i < dense.rows(); ++i) {
            const auto p = wpca_apply(wc.wpca, dense.row(i));
            std::copy(p.begin(), p.end(), wc.train_projected.row(i).begin());
        }
        wc.labels = data.labels;
        model.classifier = std::move(wc);
    }
    report.classifier_seconds = seconds_since(start);
    return model;
}

int predict(const TrainedModel& model, const HistogramFeature& feature) {
    if (const auto* svm = std::get_if<LinearSvmModel>(&model.classifier)) {
        if (feature.dim != svm->dim())
            throw InvalidArgument("feature dimension " + std::to_string(feature.dim) +
                                  " does not match model dimension " + std::to_string(svm->dim()));
        return svm_predict(*svm, feature);
    }
    const auto& wc = std::get<WpcaCosineModel>(model.classifier);
    if (feature.dim != wc.wpca.mean.size())
        throw InvalidArgument("feature dimension " + std::to_string(feature.dim) +
                              " does not match model dimension " + std::to_string(wc.wpca.mean.size()));
    std::vector<double> dense(feature.dim, 0.0);
    for (const auto& e : feature.entries)
        dense[e.index] = wc.sqrt_features ? std::sqrt(static_cast<double>(e.count)) : e.count;
    return cosine_nn(wc.train_projected, wc.labels, wpca_apply(wc.wpca, dense));
}

std::vector<int> predict_all(const TrainedModel& model, std::span<const GrayImage> images,
                             unsigned jobs) {
    const FeatureExtractor extractor(model);
    std::vector<int> out(images.size());
    parallel_for(images.size(), jobs,
                 [&](std::size_t i) { out[i] = predict(model, extractor.feature(images[i])); });
    return out;
}

}  // namespace dtln
