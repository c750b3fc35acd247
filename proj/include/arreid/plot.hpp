#pragma once

// Minimal raster charts for CI artifacts: axes plus data, no text.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "arreid/image.hpp"

namespace arreid {

using Series = std::vector<std::pair<double, double>>;

Image line_plot(std::span<const Series> series, std::size_t width = 480, std::size_t height = 320);
Image bar_plot(std::span<const double> values, std::size_t width = 480, std::size_t height = 320);

}  // namespace arreid
