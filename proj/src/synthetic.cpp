#include "arreid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "arreid/error.hpp"
#include "arreid/rng.hpp"

namespace arreid {

namespace {

void hsv_to_rgb(double h, double s, double v, double* rgb) {
    const double c = v * s;
    const double hp = std::fmod(h * 6.0, 6.0);
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double m = v - c;
    rgb[0] = r + m;
    rgb[1] = g + m;
    rgb[2] = b + m;
}

bool inside(int shape, double u, double v) {
    switch (shape) {
        case 0: return u * u + v * v <= 1.0;
        case 1: return std::abs(u) <= 0.85 && std::abs(v) <= 0.85;
        case 2: return v <= 0.8 && v >= -1.0 + 1.8 * std::abs(u);
        default: return (std::abs(u) <= 0.3 && std::abs(v) <= 1.0) || (std::abs(v) <= 0.3 && std::abs(u) <= 1.0);
    }
}

}  // namespace

IdentityAppearance identity_appearance(std::uint64_t id) {
    IdentityAppearance a;
    a.shape = static_cast<int>(id % 4);
    const double hue = std::fmod(0.1 + static_cast<double>(id) * 0.618033988749895, 1.0);
    hsv_to_rgb(hue, 0.85, 0.9, a.rgb);
    a.stripe_frequency = 1.0 + static_cast<double>((id * 7) % 5);
    return a;
}

Image render_instance(std::uint64_t id, std::uint64_t instance, const ImageShape& shape, std::uint64_t seed) {
    const IdentityAppearance look = identity_appearance(id);
    Rng rng = Rng::split(seed, (id << 32) ^ instance);
    const double h = static_cast<double>(shape.height);
    const double w = static_cast<double>(shape.width);
    const double radius = rng.uniform(0.3, 0.42) * std::min(h, w);
    const double cx = rng.uniform(0.5 * w - 0.15 * w, 0.5 * w + 0.15 * w);
    const double cy = rng.uniform(0.5 * h - 0.15 * h, 0.5 * h + 0.15 * h);
    const double background = rng.uniform(0.15, 0.55);
    const double tint = rng.uniform(-0.05, 0.05);
    const double brightness = rng.uniform(0.85, 1.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

    Image img(shape, 3);
    for (std::size_t y = 0; y < shape.height; ++y) {
        for (std::size_t x = 0; x < shape.width; ++x) {
            const double u = (static_cast<double>(x) + 0.5 - cx) / radius;
            const double v = (static_cast<double>(y) + 0.5 - cy) / radius;
            if (inside(look.shape, u, v)) {
                const double stripe =
                    0.75 + 0.25 * std::sin(look.stripe_frequency * std::numbers::pi * (u + v) + phase);
                for (std::size_t c = 0; c < 3; ++c) {
                    img.at(y, x, c) = std::clamp(look.rgb[c] * stripe * brightness, 0.0, 1.0);
                }
            } else {
                const double noise = rng.uniform(-0.04, 0.04);
                for (std::size_t c = 0; c < 3; ++c) {
                    const double offset = c == 0 ? tint : (c == 2 ? -tint : 0.0);
                    img.at(y, x, c) = std::clamp(background + offset + noise, 0.0, 1.0);
                }
            }
        }
    }
    return img;
}

LabeledImages synthesize_dataset(std::size_t num_ids, std::size_t instances_per_id, const ImageShape& shape,
                                 std::uint64_t seed) {
    if (num_ids == 0 || instances_per_id == 0) {
        throw Error(ErrorKind::config, "synthetic dataset needs at least one identity and one instance");
    }
    LabeledImages data;
    for (std::size_t id = 0; id < num_ids; ++id) {
        for (std::size_t k = 0; k < instances_per_id; ++k) {
            data.images.push_back(render_instance(id, k, shape, seed));
            data.labels.push_back(id);
        }
    }
    return data;
}

}  // namespace arreid
