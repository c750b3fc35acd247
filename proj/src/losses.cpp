#include "arreid/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "arreid/error.hpp"

namespace arreid {

namespace {

constexpr double kTieThreshold = 1e-7;

void check_finite(const Matrix& m, const char* what) {
    for (double v : m.values()) {
        if (!std::isfinite(v)) throw Error(ErrorKind::shape, std::string(what) + " contains NaN or Inf");
    }
}

}  // namespace

void LogitBatch::validate() const {
    if (labels.size() != logits.rows()) throw Error(ErrorKind::shape, "one label per logit row required");
    if (logits.rows() == 0 || logits.cols() == 0) throw Error(ErrorKind::empty_input, "empty logit batch");
    for (std::size_t y : labels) {
        if (y >= logits.cols()) throw Error(ErrorKind::shape, "label exceeds class count");
    }
    check_finite(logits, "logits");
}

EmbeddingBatch EmbeddingBatch::make(Matrix features, std::vector<std::uint64_t> labels) {
    if (labels.size() != features.rows()) throw Error(ErrorKind::shape, "one label per feature row required");
    if (features.cols() == 0) throw Error(ErrorKind::shape, "feature dimension must be at least 1");
    check_finite(features, "features");
    std::map<std::uint64_t, std::size_t> counts;
    for (auto y : labels) ++counts[y];
    EmbeddingBatch batch;
    batch.P = counts.size();
    batch.K = counts.empty() ? 0 : counts.begin()->second;
    for (const auto& [label, count] : counts) {
        if (count != batch.K) throw Error(ErrorKind::shape, "every identity must appear exactly K times");
    }
    if (batch.P < 2 || batch.K < 2) {
        throw Error(ErrorKind::degenerate_batch, "triplet loss needs P >= 2 identities and K >= 2 instances");
    }
    batch.features = std::move(features);
    batch.labels = std::move(labels);
    return batch;
}

Matrix squared_euclidean_matrix(const Matrix& features, Exec exec) {
    Matrix out(features.rows(), features.rows());
    kernels::squared_distances(exec, features, out.view());
    return out;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double id_loss(const LogitBatch& batch) {
    batch.validate();
    std::vector<double> terms(batch.logits.rows());
    for (std::size_t i = 0; i < batch.logits.rows(); ++i) {
        const auto row = batch.logits.row(i);
        const double m = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) s += std::exp(v - m);
        terms[i] = m + std::log(s) - row[batch.labels[i]];
    }
    return std::max(0.0, kernels::pairwise_sum(terms) / static_cast<double>(terms.size()));
}

Matrix id_loss_gradient(const LogitBatch& batch) {
    batch.validate();
    const double inv_n = 1.0 / static_cast<double>(batch.logits.rows());
    Matrix grad(batch.logits.rows(), batch.logits.cols());
    for (std::size_t i = 0; i < batch.logits.rows(); ++i) {
        const auto row = batch.logits.row(i);
        const double m = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double v : row) s += std::exp(v - m);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double p = std::exp(row[c] - m) / s;
            grad(i, c) = (p - (c == batch.labels[i] ? 1.0 : 0.0)) * inv_n;
        }
    }
    return grad;
}

HardTriplets select_hard_triplets(const Matrix& distances, std::span<const std::uint64_t> labels) {
    const std::size_t n = labels.size();
    HardTriplets t{std::vector<std::size_t>(n), std::vector<std::size_t>(n), std::vector<double>(n)};
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a) {
        double best_p = -inf, second_p = -inf, best_n = inf, second_n = inf;
        std::size_t ip = n, in = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == a) continue;
            const double d = distances(a, j);
            if (labels[j] == labels[a]) {
                if (d > best_p) {
                    second_p = best_p;
                    best_p = d;
                    ip = j;
                } else if (d > second_p) {
                    second_p = d;
                }
            } else {
                if (d < best_n) {
                    second_n = best_n;
                    best_n = d;
                    in = j;
                } else if (d < second_n) {
                    second_n = d;
                }
            }
        }
        t.positive[a] = ip;
        t.negative[a] = in;
        t.gap[a] = std::min(best_p - second_p, second_n - best_n);
    }
    return t;
}

double triplet_loss(const EmbeddingBatch& batch) {
    const Matrix dist = squared_euclidean_matrix(batch.features);
    const HardTriplets t = select_hard_triplets(dist, batch.labels);
    std::vector<double> terms(batch.labels.size());
    for (std::size_t a = 0; a < terms.size(); ++a) {
        terms[a] = softplus(dist(a, t.positive[a]) - dist(a, t.negative[a]));
    }
    return kernels::pairwise_sum(terms) / static_cast<double>(terms.size());
}

Matrix triplet_loss_gradient(const EmbeddingBatch& batch) {
    const Matrix& f = batch.features;
    const Matrix dist = squared_euclidean_matrix(f);
    const HardTriplets t = select_hard_triplets(dist, batch.labels);
    const double inv_n = 1.0 / static_cast<double>(f.rows());
    Matrix grad(f.rows(), f.cols());
    for (std::size_t a = 0; a < f.rows(); ++a) {
        const std::size_t p = t.positive[a];
        const std::size_t n = t.negative[a];
        const double s = sigmoid(dist(a, p) - dist(a, n)) * inv_n;
        for (std::size_t k = 0; k < f.cols(); ++k) {
            const double dap = 2.0 * (f(a, k) - f(p, k));
            const double dan = 2.0 * (f(a, k) - f(n, k));
            grad(a, k) += s * (dap - dan);
            grad(p, k) -= s * dap;
            grad(n, k) += s * dan;
        }
    }
    return grad;
}

GradientCheckReport finite_difference_check(const DifferentiableFunction& fn, std::span<const double> params,
                                            double epsilon, double tolerance,
                                            std::span<const std::size_t> coordinates) {
    GradientCheckReport report;
    const std::vector<double> analytic = fn.gradient(params);
    std::vector<std::size_t> coords(coordinates.begin(), coordinates.end());
    if (coords.empty()) {
        coords.resize(params.size());
        for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    }
    std::vector<double> plus(params.begin(), params.end());
    std::vector<double> minus(params.begin(), params.end());
    for (std::size_t i : coords) {
        plus[i] = params[i] + epsilon;
        minus[i] = params[i] - epsilon;
        if (fn.straddles_kink && fn.straddles_kink(plus, minus)) {
            report.skipped.push_back(i);
            report.warnings.push_back("inconclusive at kink: coordinate " + std::to_string(i) + " skipped");
        } else {
            const double fd = (fn.value(plus) - fn.value(minus)) / (2.0 * epsilon);
            const double g = analytic[i];
            const double rel = std::abs(fd - g) / std::max({1.0, std::abs(fd), std::abs(g)});
            report.max_relative_error = std::max(report.max_relative_error, rel);
            ++report.checked;
        }
        plus[i] = params[i];
        minus[i] = params[i];
    }
    report.passed = report.max_relative_error < tolerance;
    return report;
}

DifferentiableFunction id_loss_objective(std::vector<std::size_t> labels, std::size_t classes) {
    auto batch_of = [labels, classes](std::span<const double> x) {
        return LogitBatch{Matrix(labels.size(), classes, std::vector<double>(x.begin(), x.end())), labels};
    };
    DifferentiableFunction fn;
    fn.value = [batch_of](std::span<const double> x) { return id_loss(batch_of(x)); };
    fn.gradient = [batch_of](std::span<const double> x) {
        const Matrix g = id_loss_gradient(batch_of(x));
        return std::vector<double>(g.values().begin(), g.values().end());
    };
    return fn;
}

DifferentiableFunction triplet_loss_objective(std::vector<std::uint64_t> labels, std::size_t dim) {
    auto batch_of = [labels, dim](std::span<const double> x) {
        return EmbeddingBatch::make(Matrix(labels.size(), dim, std::vector<double>(x.begin(), x.end())), labels);
    };
    DifferentiableFunction fn;
    fn.value = [batch_of](std::span<const double> x) { return triplet_loss(batch_of(x)); };
    fn.gradient = [batch_of](std::span<const double> x) {
        const Matrix g = triplet_loss_gradient(batch_of(x));
        return std::vector<double>(g.values().begin(), g.values().end());
    };
    fn.straddles_kink = [batch_of](std::span<const double> a, std::span<const double> b) {
        const EmbeddingBatch ba = batch_of(a);
        const EmbeddingBatch bb = batch_of(b);
        const HardTriplets ta = select_hard_triplets(squared_euclidean_matrix(ba.features), ba.labels);
        const HardTriplets tb = select_hard_triplets(squared_euclidean_matrix(bb.features), bb.labels);
        if (ta.positive != tb.positive || ta.negative != tb.negative) return true;
        for (std::size_t i = 0; i < ta.gap.size(); ++i) {
            if (ta.gap[i] < kTieThreshold || tb.gap[i] < kTieThreshold) return true;
        }
        return false;
    };
    return fn;
}

}  // namespace arreid
