#pragma once

// Patch-grid geometry under (possibly uneven) strides, dataset aspect-ratio
// statistics with 1-D k-means, and per-cluster resize plans.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace arreid {

struct ImageShape {
    std::size_t height = 1;
    std::size_t width = 1;

    // Width over height.
    double aspect_ratio() const { return static_cast<double>(width) / static_cast<double>(height); }

    friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

struct PatchSpec {
    std::size_t patch_h = 16;
    std::size_t patch_w = 16;
    std::size_t stride_h = 16;
    std::size_t stride_w = 16;

    bool overlapping() const { return stride_h < patch_h || stride_w < patch_w; }
    static PatchSpec square(std::size_t patch, std::size_t stride_h, std::size_t stride_w) {
        return {patch, patch, stride_h, stride_w};
    }

    friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

struct PatchPosition {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t y = 0;  // pixel origin
    std::size_t x = 0;

    friend bool operator==(const PatchPosition&, const PatchPosition&) = default;
};

struct PatchGrid {
    ImageShape shape;
    PatchSpec spec;
    std::size_t n_y = 0;
    std::size_t n_x = 0;
    std::size_t n = 0;
    std::vector<PatchPosition> positions;  // row-major
};

// Floors non-divisible strides: trailing pixels that cannot hold a full patch
// are dropped. Throws Error(invalid_geometry) naming the offending dimension.
PatchGrid compute_patch_grid(const ImageShape& shape, const PatchSpec& spec);

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;
    std::size_t count = 0;
};

struct SizeSummary {
    double height = 0.0;
    double width = 0.0;
};

struct AspectRatioStats {
    std::size_t count = 0;
    double mean_ar = 0.0;
    double median_ar = 0.0;
    SizeSummary mean_size;
    SizeSummary median_size;
    std::vector<HistogramBin> histogram;
    std::vector<double> cluster_centers;  // ascending
};

struct KMeansResult {
    std::vector<double> centers;            // ascending
    std::vector<std::size_t> assignment;    // per input value, index into centers
    std::vector<double> sse_trace;          // objective after every Lloyd iteration
    std::size_t iterations = 0;
};

// 1-D k-means. Farthest-point seeding starting at the smallest value (seeded
// RNG breaks distance ties), Lloyd iterations until every center moves less
// than 1e-9 or 300 iterations, then single-point (Hartigan) moves until no
// reassignment lowers the SSE.
KMeansResult kmeans_1d(std::span<const double> values, std::size_t k, std::uint64_t seed = 0);

double within_cluster_sse(std::span<const double> values, std::span<const std::size_t> assignment,
                          std::span<const double> centers);

AspectRatioStats aspect_ratio_stats(std::span<const ImageShape> shapes, std::size_t k,
                                    std::size_t bins, std::uint64_t seed = 0);

struct ResizeTarget {
    std::size_t target_h = 0;
    std::size_t target_w = 0;
    double model_ar = 1.0;

    ImageShape shape() const { return {target_h, target_w}; }
    friend bool operator==(const ResizeTarget&, const ResizeTarget&) = default;
};

struct ResizePlan {
    std::vector<ResizeTarget> targets;
    friend bool operator==(const ResizePlan&, const ResizePlan&) = default;
};

// One target per cluster center; width rounds half away from zero.
ResizePlan plan_input_sizes(std::span<const double> cluster_centers, std::size_t base_height);
inline ResizePlan plan_input_sizes(const AspectRatioStats& stats, std::size_t base_height) {
    return plan_input_sizes(stats.cluster_centers, base_height);
}

}  // namespace arreid
