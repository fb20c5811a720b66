#include <random>

#include <benchmark/benchmark.h>

#include "dtln/classify.hpp"
#include "dtln/linalg.hpp"
#include "dtln/model.hpp"

namespace {

dtln::GrayImage noise_image(std::mt19937_64& e) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    dtln::GrayImage img(28, 28);
    for (double& v : img.pixels) v = u(e);
    return img;
}

// Model with the default 7x7 / 8 / 8 layout trained on noise images.
const dtln::TrainedModel& noise_model() {
    static const dtln::TrainedModel model = [] {
        std::mt19937_64 e(3);
        dtln::LabeledImages d;
        for (int i = 0; i < 200; ++i) {
            d.images.push_back(noise_image(e));
            d.labels.push_back(i % 10);
        }
        dtln::Config cfg;
        cfg.patches_per_layer = 2000;
        return dtln::train_model(d, cfg, dtln::TrainOptions{});
    }();
    return model;
}

void BM_MapLayer(benchmark::State& state) {
    const auto& model = noise_model();
    const dtln::FeatureExtractor ex(model);
    std::mt19937_64 e(5);
    const dtln::FeatureMap input = noise_image(e);
    for (auto _ : state) benchmark::DoNotOptimize(ex.first().map(input));
}
BENCHMARK(BM_MapLayer);

void BM_FeatureOf(benchmark::State& state) {
    const dtln::FeatureExtractor ex(noise_model());
    std::mt19937_64 e(6);
    const dtln::GrayImage img = noise_image(e);
    for (auto _ : state) benchmark::DoNotOptimize(ex.feature(img));
}
BENCHMARK(BM_FeatureOf)->Unit(benchmark::kMicrosecond);

void BM_Jacobi49(benchmark::State& state) {
    std::mt19937_64 e(7);
    std::normal_distribution<double> g;
    dtln::Matrix a(49, 200);
    for (double& v : a.data()) v = g(e);
    const dtln::Matrix s = dtln::gram_rows(a);
    for (auto _ : state) benchmark::DoNotOptimize(dtln::jacobi_eigen(s));
}
BENCHMARK(BM_Jacobi49)->Unit(benchmark::kMillisecond);

void BM_SvmTrain(benchmark::State& state) {
    const auto& model = noise_model();
    const dtln::FeatureExtractor ex(model);
    std::mt19937_64 e(8);
    const std::size_t dim = ex.feature_dim(28, 28);
    dtln::SparseMatrix x(dim);
    std::vector<int> y;
    for (int i = 0; i < static_cast<int>(state.range(0)); ++i) {
        x.add_row(ex.feature(noise_image(e)));
        y.push_back(i % 10);
    }
    dtln::SvmOptions opt;
    for (auto _ : state) benchmark::DoNotOptimize(dtln::svm_train(x, y, opt));
}
BENCHMARK(BM_SvmTrain)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
