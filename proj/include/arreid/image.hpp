#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "arreid/patch_geometry.hpp"

namespace arreid {

// Normalized image: row-major, channel-last, values in [0, 1].
class Image {
public:
    Image() = default;
    Image(ImageShape shape, std::size_t channels, double fill = 0.0);
    Image(ImageShape shape, std::size_t channels, std::vector<double> pixels);

    const ImageShape& shape() const { return shape_; }
    std::size_t height() const { return shape_.height; }
    std::size_t width() const { return shape_.width; }
    std::size_t channels() const { return channels_; }

    double& at(std::size_t y, std::size_t x, std::size_t c) { return pixels_[(y * shape_.width + x) * channels_ + c]; }
    double at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels_[(y * shape_.width + x) * channels_ + c];
    }

    std::span<double> pixels() { return pixels_; }
    std::span<const double> pixels() const { return pixels_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    ImageShape shape_{};
    std::size_t channels_ = 3;
    std::vector<double> pixels_;
};

// Bilinear resize with half-pixel centers (align_corners = false).
Image resize_bilinear(const Image& image, const ImageShape& target);

}  // namespace arreid
