#include "dtln/filter_learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dtln/linalg.hpp"

namespace dtln {

std::vector<PatchSite> plan_patch_sites(std::span<const SourceSize> sources, PatchShape shape,
                                        std::size_t m, Rng& rng) {
    if (m < 1) throw InvalidArgument("sample_patches: m must be at least 1");
    if (sources.empty()) throw InvalidArgument("sample_patches: no sources");

    // Cumulative count of valid offsets, so that every (source, offset)
    // pair is equally likely even when source sizes differ.
    std::vector<std::uint64_t> cumulative(sources.size());
    std::uint64_t total = 0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
        const auto& src = sources[s];
        if (src.height < shape.k1 || src.width < shape.k2)
            throw InvalidArgument("sample_patches: source " + std::to_string(s) + " (" +
                                  std::to_string(src.width) + "x" + std::to_string(src.height) +
                                  ") is smaller than the patch shape");
        total += static_cast<std::uint64_t>(src.height - shape.k1 + 1) *
                 static_cast<std::uint64_t>(src.width - shape.k2 + 1);
        cumulative[s] = total;
    }

    std::vector<PatchSite> sites(m);
    for (auto& site : sites) {
        const std::uint64_t u = rng.below(total);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto s = static_cast<std::size_t>(it - cumulative.begin());
        const std::uint64_t local = u - (s == 0 ? 0 : cumulative[s - 1]);
        const auto cols = static_cast<std::uint64_t>(sources[s].width - shape.k2 + 1);
        site.source = static_cast<std::uint32_t>(s);
        site.row = static_cast<int>(local / cols);
        site.col = static_cast<int>(local % cols);
    }
    return sites;
}

void gather_patch(const GrayImage& source, PatchShape shape, int row, int col,
                  std::span<double> out) {
    std::size_t k = 0;
    for (int r = 0; r < shape.k1; ++r) {
        const double* src = source.pixels.data() + static_cast<std::size_t>(row + r) * source.width + col;
        for (int c = 0; c < shape.k2; ++c) out[k++] = src[c];
    }
}

PatchMatrix sample_patches(std::span<const GrayImage> sources, PatchShape shape, std::size_t m,
                           Rng& rng) {
    std::vector<SourceSize> sizes;
    sizes.reserve(sources.size());
    for (const auto& s : sources) sizes.push_back({s.width, s.height});
    const auto sites = plan_patch_sites(sizes, shape, m, rng);

    PatchMatrix out(shape, m);
    for (std::size_t i = 0; i < m; ++i)
        gather_patch(sources[sites[i].source], shape, sites[i].row, sites[i].col, out.column(i));
    return out;
}

PcaFilters learn_pca(const PatchMatrix& patches, std::size_t count) {
    const std::size_t d = patches.dim();
    if (count < 1 || count > d)
        throw InvalidArgument("learn_pca_filters: filter count must be in 1..k1*k2");

    // Z Z^T accumulated in blocks of columns; each block's partial sum is
    // added in order, so the result does not depend on thread scheduling.
    constexpr std::size_t block = 4096;
    Matrix scatter(d, d);
    Matrix partial(d, d);
    for (std::size_t start = 0; start < patches.columns(); start += block) {
        std::fill(partial.data().begin(), partial.data().end(), 0.0);
        const std::size_t stop = std::min(patches.columns(), start + block);
        for (std::size_t i = start; i < stop; ++i) {
            const auto z = patches.column(i);
            for (std::size_t r = 0; r < d; ++r) {
                const double zr = z[r];
                auto row = partial.row(r);
                for (std::size_t c = r; c < d; ++c) row[c] += zr * z[c];
            }
        }
        for (std::size_t r = 0; r < d; ++r)
            for (std::size_t c = r; c < d; ++c) scatter(r, c) += partial(r, c);
    }
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t c = 0; c < r; ++c) scatter(r, c) = scatter(c, r);

    SymmetricEigen eig = jacobi_eigen(scatter);

    PcaFilters out;
    out.eigenvalues = std::move(eig.values);
    out.bank.kind = LayerKind::Pca;
    out.bank.shape = patches.shape();
    out.bank.weights = Matrix(count, d);
    for (std::size_t l = 0; l < count; ++l)
        std::copy_n(eig.vectors.row(l).begin(), d, out.bank.weights.row(l).begin());
    return out;
}

FilterBank learn_pca_filters(const PatchMatrix& patches, std::size_t count) {
    return learn_pca(patches, count).bank;
}

// ---------------------------------------------------------------------------

void DaeTrainConfig::validate() const {
    if (!(tradeoff_c > 0.0)) throw InvalidArgument("DAE tradeoff C must be positive");
    if (!(corruption_rate >= 0.0 && corruption_rate < 1.0))
        throw InvalidArgument("DAE corruption rate must be in [0,1)");
    if (epochs < 1) throw InvalidArgument("DAE epochs must be at least 1");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("DAE learning rate must be non-negative");
    if (minibatch < 1) throw InvalidArgument("DAE minibatch must be at least 1");
}

DaeParams DaeParams::random_init(std::size_t count, std::size_t dim, Rng& rng) {
    DaeParams p;
    p.weights = Matrix(count, dim);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
    for (double& w : p.weights.data()) w = rng.uniform(-bound, bound);
    p.enc_bias.assign(count, 0.0);
    p.dec_bias.assign(dim, 0.0);
    return p;
}

namespace {

// Scratch buffers for one forward/backward pass.
struct DaeWork {
    std::vector<double> hidden;
    std::vector<double> output;
    std::vector<double> delta_out;
    std::vector<double> delta_hidden;

    DaeWork(std::size_t count, std::size_t dim)
        : hidden(count), output(dim), delta_out(dim), delta_hidden(count) {}
};

void forward(const DaeParams& p, std::span<const double> input, DaeWork& w) {
    const std::size_t count = p.weights.rows();
    const std::size_t dim = p.weights.cols();
    for (std::size_t l = 0; l < count; ++l)
        w.hidden[l] = std::tanh(dot(p.weights.row(l), input) + p.enc_bias[l]);
    for (std::size_t d = 0; d < dim; ++d) w.output[d] = p.dec_bias[d];
    for (std::size_t l = 0; l < count; ++l) {
        const double h = w.hidden[l];
        const auto row = p.weights.row(l);
        for (std::size_t d = 0; d < dim; ++d) w.output[d] += row[d] * h;
    }
    for (std::size_t d = 0; d < dim; ++d) w.output[d] = std::tanh(w.output[d]);
}

double squared_error(std::span<const double> target, const std::vector<double>& output) {
    double s = 0.0;
    for (std::size_t d = 0; d < target.size(); ++d) {
        const double r = output[d] - target[d];
        s += r * r;
    }
    return s;
}

double frobenius_sq(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return s;
}

// Adds scale * d(C * ||z - zhat||^2)/d(params) for one sample into grad.
void accumulate_sample_gradient(const DaeParams& p, std::span<const double> clean,
                                std::span<const double> corrupted, double tradeoff_c, double scale,
                                DaeWork& w, DaeParams& grad) {
    const std::size_t count = p.weights.rows();
    const std::size_t dim = p.weights.cols();
    forward(p, corrupted, w);
    for (std::size_t d = 0; d < dim; ++d) {
        const double o = w.output[d];
        w.delta_out[d] = 2.0 * tradeoff_c * (o - clean[d]) * (1.0 - o * o);
    }
    for (std::size_t l = 0; l < count; ++l) {
        const double h = w.hidden[l];
        w.delta_hidden[l] = dot(p.weights.row(l), w.delta_out) * (1.0 - h * h);
    }
    for (std::size_t d = 0; d < dim; ++d) grad.dec_bias[d] += scale * w.delta_out[d];
    for (std::size_t l = 0; l < count; ++l) {
        grad.enc_bias[l] += scale * w.delta_hidden[l];
        auto g = grad.weights.row(l);
        const double h = w.hidden[l] * scale;
        const double dh = w.delta_hidden[l] * scale;
        // Decoder path (W^T h) and encoder path (W x) share W.
        for (std::size_t d = 0; d < dim; ++d) g[d] += h * w.delta_out[d] + dh * corrupted[d];
    }
}

DaeParams zeros_like(const DaeParams& p) {
    DaeParams g;
    g.weights = Matrix(p.weights.rows(), p.weights.cols());
    g.enc_bias.assign(p.enc_bias.size(), 0.0);
    g.dec_bias.assign(p.dec_bias.size(), 0.0);
    return g;
}

void check_dae_shapes(const DaeParams& p, const PatchMatrix& clean, const PatchMatrix& corrupted) {
    if (clean.dim() != p.weights.cols() || corrupted.dim() != p.weights.cols() ||
        clean.columns() != corrupted.columns())
        throw InvalidArgument("DAE: patch matrix shape does not match parameters");
}

}  // namespace

double dae_objective(const DaeParams& params, const PatchMatrix& clean,
                     const PatchMatrix& corrupted, double tradeoff_c) {
    check_dae_shapes(params, clean, corrupted);
    DaeWork work(params.weights.rows(), params.weights.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < clean.columns(); ++i) {
        forward(params, corrupted.column(i), work);
        loss += squared_error(clean.column(i), work.output);
    }
    return tradeoff_c * loss + frobenius_sq(params.weights);
}

DaeParams dae_gradient(const DaeParams& params, const PatchMatrix& clean,
                       const PatchMatrix& corrupted, double tradeoff_c) {
    check_dae_shapes(params, clean, corrupted);
    DaeWork work(params.weights.rows(), params.weights.cols());
    DaeParams grad = zeros_like(params);
    for (std::size_t i = 0; i < clean.columns(); ++i)
        accumulate_sample_gradient(params, clean.column(i), corrupted.column(i), tradeoff_c, 1.0,
                                   work, grad);
    for (std::size_t k = 0; k < grad.weights.data().size(); ++k)
        grad.weights.data()[k] += 2.0 * params.weights.data()[k];
    return grad;
}

PatchMatrix corrupt(const PatchMatrix& patches, double rate, Rng& rng) {
    PatchMatrix out = patches;
    if (rate <= 0.0) return out;
    for (std::size_t i = 0; i < out.columns(); ++i)
        for (double& v : out.column(i))
            if (rng.bernoulli(rate)) v = 0.0;
    return out;
}

DaeTrainResult train_dae(const PatchMatrix& patches, std::size_t count, const DaeTrainConfig& cfg) {
    cfg.validate();
    const std::size_t dim = patches.dim();
    const std::size_t m = patches.columns();
    if (count < 1 || count > 16) throw InvalidArgument("DAE filter count must be in 1..16");
    if (m < 1) throw InvalidArgument("DAE: no training patches");

    Rng init_rng = cfg.rng.stream("dae/init");
    Rng order_rng = cfg.rng.stream("dae/order");
    Rng mask_rng = cfg.rng.stream("dae/mask");
    Rng eval_rng = cfg.rng.stream("dae/eval");

    DaeTrainResult result;
    result.params = DaeParams::random_init(count, dim, init_rng);
    DaeParams& p = result.params;

    const PatchMatrix eval_input = corrupt(patches, cfg.corruption_rate, eval_rng);
    const auto inv_m = 1.0 / static_cast<double>(m);
    auto evaluate = [&] {
        const double loss = dae_objective(p, patches, eval_input, cfg.tradeoff_c) * inv_m;
        if (!std::isfinite(loss))
            throw std::runtime_error("DAE training diverged (non-finite loss); lower dae_lr");
        return loss;
    };
    auto clean_mse = [&] {
        DaeWork work(count, dim);
        double s = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            forward(p, patches.column(i), work);
            s += squared_error(patches.column(i), work.output);
        }
        return s / static_cast<double>(m * dim);
    };

    result.initial_loss = evaluate();

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    DaeWork work(count, dim);
    DaeParams grad = zeros_like(p);
    std::vector<double> noisy(dim);
    const auto batch = static_cast<std::size_t>(cfg.minibatch);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const double step = cfg.learning_rate / std::sqrt(static_cast<double>(epoch));
        order_rng.shuffle(order);
        for (std::size_t start = 0; start < m; start += batch) {
            const std::size_t stop = std::min(m, start + batch);
            const double scale = 1.0 / static_cast<double>(stop - start);
            std::fill(grad.weights.data().begin(), grad.weights.data().end(), 0.0);
            std::fill(grad.enc_bias.begin(), grad.enc_bias.end(), 0.0);
            std::fill(grad.dec_bias.begin(), grad.dec_bias.end(), 0.0);
            for (std::size_t s = start; s < stop; ++s) {
                const auto clean = patches.column(order[s]);
                for (std::size_t d = 0; d < dim; ++d)
                    noisy[d] = mask_rng.bernoulli(cfg.corruption_rate) ? 0.0 : clean[d];
                accumulate_sample_gradient(p, clean, noisy, cfg.tradeoff_c, scale, work, grad);
            }
            if (step == 0.0) continue;
            for (std::size_t k = 0; k < p.weights.data().size(); ++k) {
                const double g = grad.weights.data()[k] + 2.0 * inv_m * p.weights.data()[k];
                p.weights.data()[k] -= step * g;
            }
            for (std::size_t l = 0; l < count; ++l) p.enc_bias[l] -= step * grad.enc_bias[l];
            for (std::size_t d = 0; d < dim; ++d) p.dec_bias[d] -= step * grad.dec_bias[d];
        }
        result.epoch_loss.push_back(evaluate());
        result.epoch_mse.push_back(clean_mse());
    }

    result.bank.kind = LayerKind::Dae;
    result.bank.shape = patches.shape();
    result.bank.weights = p.weights;
    result.bank.biases = p.enc_bias;
    return result;
}

FilterBank learn_dae_filters(const PatchMatrix& patches, std::size_t count,
                             const DaeTrainConfig& cfg) {
    return train_dae(patches, count, cfg).bank;
}

}  // namespace dtln
