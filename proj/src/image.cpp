#include "arreid/image.hpp"

#include <algorithm>
#include <cmath>

#include "arreid/error.hpp"

namespace arreid {

Image::Image(ImageShape shape, std::size_t channels, double fill)
    : shape_(shape), channels_(channels), pixels_(shape.height * shape.width * channels, fill) {
    if (shape.height == 0 || shape.width == 0 || channels == 0) {
        throw Error(ErrorKind::invalid_geometry, "image dimensions and channel count must be positive");
    }
}

Image::Image(ImageShape shape, std::size_t channels, std::vector<double> pixels)
    : shape_(shape), channels_(channels), pixels_(std::move(pixels)) {
    if (shape.height == 0 || shape.width == 0 || channels == 0) {
        throw Error(ErrorKind::invalid_geometry, "image dimensions and channel count must be positive");
    }
    if (pixels_.size() != shape.height * shape.width * channels) {
        throw Error(ErrorKind::shape, "pixel buffer size does not match height x width x channels");
    }
}

Image resize_bilinear(const Image& image, const ImageShape& target) {
    if (target == image.shape()) return image;
    Image out(target, image.channels());
    const double sy = static_cast<double>(image.height()) / static_cast<double>(target.height);
    const double sx = static_cast<double>(image.width()) / static_cast<double>(target.width);
    const auto max_y = static_cast<double>(image.height() - 1);
    const auto max_x = static_cast<double>(image.width() - 1);
    for (std::size_t y = 0; y < target.height; ++y) {
        const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::size_t x = 0; x < target.width; ++x) {
            const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
            const double wx = fx - static_cast<double>(x0);
            for (std::size_t c = 0; c < image.channels(); ++c) {
                const double top = (1.0 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
                const double bottom = (1.0 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
                out.at(y, x, c) = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
            }
        }
    }
    return out;
}

}  // namespace arreid
