#include "dtln/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

#include "dtln/linalg.hpp"
#include "dtln/parallel.hpp"

namespace dtln {

void SparseMatrix::add_row(const HistogramFeature& feature) {
    if (feature.dim > cols_) cols_ = feature.dim;
    for (const auto& e : feature.entries) {
        index_.push_back(e.index);
        value_.push_back(static_cast<float>(e.count));
    }
    offsets_.push_back(index_.size());
}

void SparseMatrix::add_row(std::span<const std::pair<std::uint32_t, double>> entries) {
    for (std::size_t k = 0; k < entries.size(); ++k) {
        if (k > 0 && entries[k].first <= entries[k - 1].first)
            throw InvalidArgument("sparse row indices must be ascending");
        if (!std::isfinite(entries[k].second)) throw InvalidArgument("non-finite feature value");
    }
    for (const auto& [idx, val] : entries) {
        index_.push_back(idx);
        value_.push_back(static_cast<float>(val));
        cols_ = std::max<std::size_t>(cols_, std::size_t{idx} + 1);
    }
    offsets_.push_back(index_.size());
}

void SparseMatrix::add_dense_row(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("non-finite feature value");
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (values[k] != 0.0) {
            index_.push_back(static_cast<std::uint32_t>(k));
            value_.push_back(static_cast<float>(values[k]));
        }
    }
    cols_ = std::max(cols_, values.size());
    offsets_.push_back(index_.size());
}

void SparseMatrix::reserve(std::size_t rows, std::size_t nonzeros) {
    offsets_.reserve(rows + 1);
    index_.reserve(nonzeros);
    value_.reserve(nonzeros);
}

namespace {

double sparse_dot(std::span<const double> w, SparseRow x) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.index.size(); ++k)
        if (x.index[k] < w.size()) s += w[x.index[k]] * x.value[k];
    return s;
}

// Binary problem for labels y in {+1,-1}. The bias is the last entry of w,
// paired with a constant feature 1 on every sample.
SvmClassReport solve_binary(const SparseMatrix& x, std::span<const signed char> y,
                            const SvmOptions& opt, Rng rng, std::vector<double>& w) {
    const std::size_t n = x.rows();
    const std::size_t dim = x.cols();
    w.assign(dim + 1, 0.0);
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qd(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        double s = 1.0;  // bias feature
        for (double v : row.value) s += v * v;
        qd[i] = s;
    }

    std::vector<std::size_t> index(n);
    std::iota(index.begin(), index.end(), std::size_t{0});
    std::size_t active = n;
    double pg_max_old = std::numeric_limits<double>::infinity();
    double pg_min_old = -std::numeric_limits<double>::infinity();
    const double upper = opt.cost_c;
    const std::span<const double> wspan(w.data(), dim);

    SvmClassReport report;
    double sum_alpha = 0.0;
    while (report.passes < opt.max_passes) {
        double pg_max_new = -std::numeric_limits<double>::infinity();
        double pg_min_new = std::numeric_limits<double>::infinity();

        for (std::size_t i = 0; i < active; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(active - i));
            std::swap(index[i], index[j]);
        }

        for (std::size_t s = 0; s < active; ++s) {
            const std::size_t i = index[s];
            const auto row = x.row(i);
            const double yi = y[i];
            const double g = yi * (sparse_dot(wspan, row) + w[dim]) - 1.0;

            double pg = 0.0;
            if (alpha[i] == 0.0) {
                if (g > pg_max_old) {
                    --active;
                    std::swap(index[s], index[active]);
                    --s;
                    continue;
                }
                if (g < 0.0) pg = g;
            } else if (alpha[i] == upper) {
                if (g < pg_min_old) {
                    --active;
                    std::swap(index[s], index[active]);
                    --s;
                    continue;
                }
                if (g > 0.0) pg = g;
            } else {
                pg = g;
            }
            pg_max_new = std::max(pg_max_new, pg);
            pg_min_new = std::min(pg_min_new, pg);

            if (std::abs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::min(std::max(old - g / qd[i], 0.0), upper);
                const double d = (alpha[i] - old) * yi;
                sum_alpha += alpha[i] - old;
                for (std::size_t k = 0; k < row.index.size(); ++k) w[row.index[k]] += d * row.value[k];
                w[dim] += d;
            }
        }
        ++report.passes;

        double wnorm = 0.0;
        for (double v : w) wnorm += v * v;
        report.dual_objective.push_back(0.5 * wnorm - sum_alpha);

        if (pg_max_new - pg_min_new <= opt.tolerance) {
            if (active == n) {
                report.converged = true;
                break;
            }
            // Re-check the shrunken variables with a full pass.
            active = n;
            pg_max_old = std::numeric_limits<double>::infinity();
            pg_min_old = -std::numeric_limits<double>::infinity();
            continue;
        }
        pg_max_old = pg_max_new > 0.0 ? pg_max_new : std::numeric_limits<double>::infinity();
        pg_min_old = pg_min_new < 0.0 ? pg_min_new : -std::numeric_limits<double>::infinity();
    }
    return report;
}

}  // namespace

SvmTrainResult svm_train(const SparseMatrix& features, std::span<const int> labels,
                         const SvmOptions& options) {
    if (labels.size() != features.rows()) throw InvalidArgument("svm_train: label count mismatch");
    if (!(options.cost_c > 0.0)) throw InvalidArgument("svm_train: cost must be positive");
    std::map<int, std::size_t> per_class;
    for (int l : labels) ++per_class[l];
    if (per_class.size() < 2) throw InvalidArgument("svm_train: need at least two classes");

    SvmTrainResult result;
    auto& model = result.model;
    model.cost_c = options.cost_c;
    for (const auto& [label, count] : per_class) model.classes.push_back(label);
    const std::size_t nc = model.classes.size();
    const std::size_t dim = features.cols();
    model.weights = Matrix(nc, dim);
    model.bias.assign(nc, 0.0);
    result.reports.resize(nc);

    const Rng root(options.seed);
    parallel_for(nc, options.jobs, [&](std::size_t c) {
        std::vector<signed char> y(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == model.classes[c] ? 1 : -1;
        std::vector<double> w;
        result.reports[c] =
            solve_binary(features, y, options, root.stream("svm/class" + std::to_string(c)), w);
        std::copy_n(w.begin(), dim, model.weights.row(c).begin());
        model.bias[c] = w[dim];
    });
    return result;
}

std::vector<double> svm_decision_values(const LinearSvmModel& model, SparseRow x) {
    std::vector<double> out(model.classes.size());
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = sparse_dot(model.weights.row(c), x) + model.bias[c];
    return out;
}

int svm_predict(const LinearSvmModel& model, SparseRow x) {
    const auto values = svm_decision_values(model, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < values.size(); ++c)
        if (values[c] > values[best]) best = c;
    return model.classes[best];
}

int svm_predict(const LinearSvmModel& model, const HistogramFeature& x) {
    SparseMatrix one(x.dim);
    one.add_row(x);
    return svm_predict(model, one.row(0));
}

// ---------------------------------------------------------------------------

WpcaModel wpca_fit(const Matrix& samples, std::size_t target_dim) {
    const std::size_t n = samples.rows();
    const std::size_t d = samples.cols();
    if (target_dim < 1) throw InvalidArgument("wpca_fit: target dimension must be at least 1");
    if (n < 2) throw InvalidArgument("wpca_fit: need at least two samples");

    WpcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = samples.row(i);
        for (std::size_t k = 0; k < d; ++k) model.mean[k] += r[k];
    }
    for (double& v : model.mean) v /= static_cast<double>(n);

    Matrix centered = samples;
    for (std::size_t i = 0; i < n; ++i) {
        auto r = centered.row(i);
        for (std::size_t k = 0; k < d; ++k) r[k] -= model.mean[k];
    }
    const double denom = static_cast<double>(n - 1);

    // directions: one unit principal direction per row, variances matching.
    Matrix directions;
    std::vector<double> variances;
    if (d <= n) {
        Matrix cov(d, d);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = centered.row(i);
            for (std::size_t a = 0; a < d; ++a) {
                if (r[a] == 0.0) continue;
                auto crow = cov.row(a);
                for (std::size_t b = a; b < d; ++b) crow[b] += r[a] * r[b];
            }
        }
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) cov(b, a) = cov(a, b) = cov(a, b) / denom;
        auto eig = jacobi_eigen(cov);
        directions = std::move(eig.vectors);
        variances = std::move(eig.values);
    } else {
        auto eig = jacobi_eigen(gram_rows(centered));
        directions = Matrix(n, d);
        variances.resize(n);
        for (std::size_t r = 0; r < n; ++r) {
            const double mu = eig.values[r];
            variances[r] = mu / denom;
            if (mu <= 0.0) continue;
            const double inv = 1.0 / std::sqrt(mu);
            auto dir = directions.row(r);
            const auto v = eig.vectors.row(r);
            for (std::size_t i = 0; i < n; ++i) {
                const auto x = centered.row(i);
                const double coef = v[i] * inv;
                for (std::size_t k = 0; k < d; ++k) dir[k] += coef * x[k];
            }
            fix_sign(dir);
        }
    }

    const double floor = 1e-10 * std::max(0.0, variances.front());
    std::size_t available = 0;
    while (available < variances.size() && variances[available] > floor) ++available;
    if (target_dim > available)
        throw InvalidArgument("wpca_fit: target dimension " + std::to_string(target_dim) +
                              " exceeds available rank " + std::to_string(available));

    model.projection = Matrix(target_dim, d);
    for (std::size_t r = 0; r < target_dim; ++r) {
        const double scale = 1.0 / std::sqrt(variances[r]);
        const auto src = directions.row(r);
        auto dst = model.projection.row(r);
        for (std::size_t k = 0; k < d; ++k) dst[k] = src[k] * scale;
    }
    return model;
}

std::vector<double> wpca_apply(const WpcaModel& model, std::span<const double> x) {
    if (x.size() != model.mean.size()) throw InvalidArgument("wpca_apply: dimension mismatch");
    std::vector<double> centered(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) centered[k] = x[k] - model.mean[k];
    std::vector<double> out(model.projection.rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = dot(model.projection.row(r), centered);
    return out;
}

std::vector<double> wpca_apply(const WpcaModel& model, SparseRow x) {
    std::vector<double> out(model.projection.rows());
    for (std::size_t r = 0; r < out.size(); ++r)
        out[r] = sparse_dot(model.projection.row(r), x) - dot(model.projection.row(r), model.mean);
    return out;
}

int cosine_nn(const Matrix& train, std::span<const int> labels, std::span<const double> query) {
    if (labels.size() != train.rows()) throw InvalidArgument("cosine_nn: label count mismatch");
    if (query.size() != train.cols()) throw InvalidArgument("cosine_nn: dimension mismatch");
    const double qn = std::sqrt(dot(query, query));
    if (qn == 0.0) throw InvalidArgument("cosine_nn: all-zero query");

    std::size_t best = train.rows();
    double best_sim = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < train.rows(); ++i) {
        const double tn = std::sqrt(dot(train.row(i), train.row(i)));
        if (tn == 0.0) continue;
        const double sim = dot(train.row(i), query) / (qn * tn);
        if (sim > best_sim) {
            best_sim = sim;
            best = i;
        }
    }
    if (best == train.rows()) throw InvalidArgument("cosine_nn: no nonzero training vector");
    return labels[best];
}

}  // namespace dtln
