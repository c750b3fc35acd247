#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "arreid/image.hpp"
#include "arreid/matrix.hpp"
#include "arreid/rng.hpp"

namespace arreid::testing {

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = rng.normal(0.0, scale);
    return m;
}

inline Image random_image(Rng& rng, ImageShape shape, std::size_t channels = 3) {
    Image img(shape, channels);
    for (auto& v : img.pixels()) v = rng.uniform();
    return img;
}

// P ids × K instances, labels grouped by id (0, 0, ..., 1, 1, ...).
inline std::vector<std::uint64_t> grouped_labels(std::size_t P, std::size_t K, std::uint64_t first = 0) {
    std::vector<std::uint64_t> labels;
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t k = 0; k < K; ++k) labels.push_back(first + p);
    return labels;
}

}  // namespace arreid::testing
