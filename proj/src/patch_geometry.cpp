#include "arreid/patch_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "arreid/error.hpp"
#include "arreid/rng.hpp"

namespace arreid {

namespace {

void check_axis(const char* name, std::size_t dim, std::size_t patch, std::size_t stride) {
    if (patch == 0 || stride == 0) {
        throw Error(ErrorKind::invalid_geometry,
                    std::string("patch size and stride must be positive along ") + name);
    }
    if (patch > dim) {
        throw Error(ErrorKind::invalid_geometry, std::string("patch ") + name + " " + std::to_string(patch) +
                                                     " exceeds image " + name + " " + std::to_string(dim));
    }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::size_t nearest_center(double x, std::span<const double> centers) {
    std::size_t best = 0;
    double best_d = std::abs(x - centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
        const double d = std::abs(x - centers[c]);
        if (d < best_d) {
            best = c;
            best_d = d;
        }
    }
    return best;
}

struct ClusterSums {
    std::vector<double> sum;
    std::vector<std::size_t> size;
};

ClusterSums cluster_sums(std::span<const double> values, std::span<const std::size_t> assignment, std::size_t k) {
    ClusterSums s{std::vector<double>(k, 0.0), std::vector<std::size_t>(k, 0)};
    for (std::size_t i = 0; i < values.size(); ++i) {
        s.sum[assignment[i]] += values[i];
        ++s.size[assignment[i]];
    }
    return s;
}

}  // namespace

PatchGrid compute_patch_grid(const ImageShape& shape, const PatchSpec& spec) {
    if (shape.height == 0 || shape.width == 0) {
        throw Error(ErrorKind::invalid_geometry, "image dimensions must be positive");
    }
    check_axis("height", shape.height, spec.patch_h, spec.stride_h);
    check_axis("width", shape.width, spec.patch_w, spec.stride_w);

    PatchGrid grid;
    grid.shape = shape;
    grid.spec = spec;
    grid.n_y = (shape.height - spec.patch_h) / spec.stride_h + 1;
    grid.n_x = (shape.width - spec.patch_w) / spec.stride_w + 1;
    grid.n = grid.n_y * grid.n_x;
    grid.positions.reserve(grid.n);
    for (std::size_t r = 0; r < grid.n_y; ++r) {
        for (std::size_t c = 0; c < grid.n_x; ++c) {
            grid.positions.push_back({r, c, r * spec.stride_h, c * spec.stride_w});
        }
    }
    return grid;
}

double within_cluster_sse(std::span<const double> values, std::span<const std::size_t> assignment,
                          std::span<const double> centers) {
    double sse = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - centers[assignment[i]];
        sse += d * d;
    }
    return sse;
}

KMeansResult kmeans_1d(std::span<const double> values, std::size_t k, std::uint64_t seed) {
    if (values.empty()) throw Error(ErrorKind::empty_dataset, "k-means over an empty dataset");
    std::vector<double> distinct(values.begin(), values.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (k == 0 || k > distinct.size()) {
        throw Error(ErrorKind::infeasible_k, "k=" + std::to_string(k) + " but only " +
                                                 std::to_string(distinct.size()) + " distinct values");
    }

    // Farthest-point seeding over the distinct values, starting at the minimum.
    Rng rng(seed);
    std::vector<double> centers{distinct.front()};
    while (centers.size() < k) {
        double best = -1.0;
        std::vector<double> ties;
        for (double v : distinct) {
            double d = std::numeric_limits<double>::infinity();
            for (double c : centers) d = std::min(d, std::abs(v - c));
            if (d > best) {
                best = d;
                ties.assign(1, v);
            } else if (d == best) {
                ties.push_back(v);
            }
        }
        centers.push_back(ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())]);
    }
    std::sort(centers.begin(), centers.end());

    KMeansResult result;
    std::vector<std::size_t> assignment(values.size(), 0);
    constexpr std::size_t max_iterations = 300;
    for (std::size_t it = 0; it < max_iterations; ++it) {
        for (std::size_t i = 0; i < values.size(); ++i) assignment[i] = nearest_center(values[i], centers);
        ClusterSums sums = cluster_sums(values, assignment, k);
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            double next = centers[c];
            if (sums.size[c] > 0) {
                next = sums.sum[c] / static_cast<double>(sums.size[c]);
            } else {
                // Empty cluster: move it onto the worst-fit point.
                std::size_t worst = 0;
                double worst_d = -1.0;
                for (std::size_t i = 0; i < values.size(); ++i) {
                    const double d = std::abs(values[i] - centers[assignment[i]]);
                    if (sums.size[assignment[i]] > 1 && d > worst_d) {
                        worst = i;
                        worst_d = d;
                    }
                }
                next = values[worst];
            }
            shift = std::max(shift, std::abs(next - centers[c]));
            centers[c] = next;
        }
        result.iterations = it + 1;
        result.sse_trace.push_back(within_cluster_sse(values, assignment, centers));
        if (shift < 1e-9) break;
    }
    for (std::size_t i = 0; i < values.size(); ++i) assignment[i] = nearest_center(values[i], centers);

    // Hartigan refinement: move single points while that strictly lowers SSE.
    ClusterSums sums = cluster_sums(values, assignment, k);
    for (std::size_t c = 0; c < k; ++c) {
        if (sums.size[c] > 0) centers[c] = sums.sum[c] / static_cast<double>(sums.size[c]);
    }
    for (std::size_t pass = 0; pass < 1000; ++pass) {
        bool moved = false;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const std::size_t from = assignment[i];
            if (sums.size[from] < 2) continue;
            const double x = values[i];
            const double na = static_cast<double>(sums.size[from]);
            const double gain = na / (na - 1.0) * (x - centers[from]) * (x - centers[from]);
            std::size_t to = from;
            double best_delta = -1e-12 * std::max(1.0, gain);
            for (std::size_t c = 0; c < k; ++c) {
                if (c == from) continue;
                const double nb = static_cast<double>(sums.size[c]);
                const double cost = nb / (nb + 1.0) * (x - centers[c]) * (x - centers[c]);
                const double delta = cost - gain;
                if (delta < best_delta) {
                    best_delta = delta;
                    to = c;
                }
            }
            if (to == from) continue;
            sums.sum[from] -= x;
            --sums.size[from];
            sums.sum[to] += x;
            ++sums.size[to];
            assignment[i] = to;
            centers[from] = sums.sum[from] / static_cast<double>(sums.size[from]);
            centers[to] = sums.sum[to] / static_cast<double>(sums.size[to]);
            moved = true;
        }
        if (!moved) break;
    }
    // Recompute means from scratch so centers do not carry incremental drift.
    sums = cluster_sums(values, assignment, k);
    for (std::size_t c = 0; c < k; ++c) {
        if (sums.size[c] > 0) centers[c] = sums.sum[c] / static_cast<double>(sums.size[c]);
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return centers[a] < centers[b]; });
    std::vector<std::size_t> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[order[r]] = r;
    result.centers.resize(k);
    for (std::size_t c = 0; c < k; ++c) result.centers[rank[c]] = centers[c];
    for (auto& a : assignment) a = rank[a];
    result.assignment = std::move(assignment);
    result.sse_trace.push_back(within_cluster_sse(values, result.assignment, result.centers));
    return result;
}

AspectRatioStats aspect_ratio_stats(std::span<const ImageShape> shapes, std::size_t k, std::size_t bins,
                                    std::uint64_t seed) {
    if (shapes.empty()) throw Error(ErrorKind::empty_dataset, "no image shapes to summarize");
    if (bins == 0) throw Error(ErrorKind::config, "histogram needs at least one bin");

    std::vector<double> ars, heights, widths;
    ars.reserve(shapes.size());
    for (const auto& s : shapes) {
        if (s.height == 0 || s.width == 0) {
            throw Error(ErrorKind::invalid_geometry, "image dimensions must be positive");
        }
        ars.push_back(s.aspect_ratio());
        heights.push_back(static_cast<double>(s.height));
        widths.push_back(static_cast<double>(s.width));
    }
    // Sorting makes every downstream quantity independent of input order.
    std::sort(ars.begin(), ars.end());
    std::sort(heights.begin(), heights.end());
    std::sort(widths.begin(), widths.end());

    AspectRatioStats stats;
    stats.count = shapes.size();
    stats.mean_ar = mean_of(ars);
    stats.median_ar = median_of(ars);
    stats.mean_size = {mean_of(heights), mean_of(widths)};
    stats.median_size = {median_of(heights), median_of(widths)};

    const double lo = ars.front();
    const double hi = ars.back();
    const double width = (hi - lo) / static_cast<double>(bins);
    stats.histogram.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        stats.histogram[b].lower = lo + width * static_cast<double>(b);
        stats.histogram[b].upper = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double ar : ars) {
        std::size_t b = 0;
        if (width > 0.0) {
            // Right-open bins; the last bin also takes the maximum.
            while (b + 1 < bins && ar >= stats.histogram[b].upper) ++b;
        }
        ++stats.histogram[b].count;
    }

    stats.cluster_centers = kmeans_1d(ars, k, seed).centers;
    return stats;
}

ResizePlan plan_input_sizes(std::span<const double> cluster_centers, std::size_t base_height) {
    if (base_height == 0) throw Error(ErrorKind::invalid_geometry, "base height must be positive");
    ResizePlan plan;
    for (double center : cluster_centers) {
        if (!(center > 0.0) || !std::isfinite(center)) {
            throw Error(ErrorKind::invalid_geometry, "cluster center must be a positive aspect ratio");
        }
        // std::lround rounds half away from zero.
        const long w = std::lround(static_cast<double>(base_height) * center);
        if (w < 1) throw Error(ErrorKind::invalid_geometry, "planned width rounds to zero");
        const ResizeTarget t{base_height, static_cast<std::size_t>(w), center};
        if (std::abs(t.shape().aspect_ratio() - center) > 1e-2) {
            throw Error(ErrorKind::invalid_geometry,
                        "base height " + std::to_string(base_height) + " too small to realize aspect ratio " +
                            std::to_string(center) + " within 1e-2");
        }
        plan.targets.push_back(t);
    }
    return plan;
}

}  // namespace arreid
