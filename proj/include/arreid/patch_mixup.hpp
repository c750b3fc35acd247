#pragma once

// Intra-image patch mixup: selected patches are blended with a randomly
// paired patch of the same image, weighted by 1 / (1 + scale * distance).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "arreid/image.hpp"
#include "arreid/kernels.hpp"
#include "arreid/matrix.hpp"
#include "arreid/patch_geometry.hpp"
#include "arreid/rng.hpp"

namespace arreid {

struct MixupConfig {
    double ar_low = 0.5;           // eligible aspect-ratio range, inclusive
    double ar_high = 2.0;
    double image_fraction = 0.75;  // share of eligible images that get mixed
    double patch_fraction = 0.25;  // share of patches selected per mixed image
    double distance_scale = 16.0;
    std::size_t patch_size = 16;   // mixup grid is non-overlapping: stride == patch
    std::uint64_t seed = 0;

    void validate() const;
    friend bool operator==(const MixupConfig&, const MixupConfig&) = default;
};

struct MixupPlan {
    std::vector<std::size_t> selected;  // grid indices c_k
    std::vector<std::size_t> partners;  // c'_k = permutation(c_k), a permutation of `selected`
    std::vector<double> weights;        // A[c_k][c'_k]

    bool empty() const { return selected.empty(); }
    friend bool operator==(const MixupPlan&, const MixupPlan&) = default;
};

enum class DistanceUnit { grid, pixel };

Matrix pairwise_patch_distances(const PatchGrid& grid, DistanceUnit unit = DistanceUnit::grid,
                                Exec exec = Exec::parallel);

inline double attention_score(double distance, double distance_scale) {
    return 1.0 / (1.0 + distance_scale * distance);
}

Matrix attention_scores(const Matrix& distances, double distance_scale);

// ceil(fraction * n), robust to fractions like 0.1 * 30 landing a hair above an integer.
std::size_t fraction_count(double fraction, std::size_t n);

MixupPlan build_mixup_plan(const PatchGrid& grid, const MixupConfig& config, Rng& rng);

// Output patch c = (1 - a) * patch(c) + a * patch(c'), reading from the
// unmodified input. Throws Error(overlapping_grid) when stride < patch size.
Image apply_patch_mixup(const Image& image, const PatchGrid& grid, const MixupPlan& plan);

struct AugmentedBatch {
    std::vector<Image> images;
    std::vector<std::optional<MixupPlan>> plans;  // set for images that were mixed
};

// `stream` separates calls sharing one config seed (e.g. training steps).
AugmentedBatch augment_batch_with_plans(std::span<const Image> images, const MixupConfig& config,
                                        std::uint64_t stream = 0, Exec exec = Exec::parallel);

std::vector<Image> augment_batch(std::span<const Image> images, const MixupConfig& config,
                                 std::uint64_t stream = 0, Exec exec = Exec::parallel);

}  // namespace arreid
