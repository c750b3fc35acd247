#pragma once

// Synthetic stand-in for a vehicle dataset: every identity is a distinct
// (shape, color, stripe frequency) triple, rendered per instance at a random
// position, scale and background.

#include <cstddef>
#include <cstdint>

#include "arreid/image.hpp"
#include "arreid/toy_vit.hpp"

namespace arreid {

struct IdentityAppearance {
    int shape = 0;               // 0 disc, 1 square, 2 triangle, 3 cross
    double rgb[3] = {0, 0, 0};
    double stripe_frequency = 1.0;
};

IdentityAppearance identity_appearance(std::uint64_t id);

Image render_instance(std::uint64_t id, std::uint64_t instance, const ImageShape& shape, std::uint64_t seed);

// Labels are 0..num_ids-1, each repeated instances_per_id times, grouped by id.
LabeledImages synthesize_dataset(std::size_t num_ids, std::size_t instances_per_id, const ImageShape& shape,
                                 std::uint64_t seed);

}  // namespace arreid
