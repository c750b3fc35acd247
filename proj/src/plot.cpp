#include "arreid/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace arreid {

namespace {

constexpr std::size_t kMargin = 24;

constexpr std::array<std::array<double, 3>, 4> kPalette{{
    {0.12, 0.47, 0.71},
    {0.84, 0.15, 0.16},
    {0.17, 0.63, 0.17},
    {0.58, 0.40, 0.74},
}};

void put(Image& img, long x, long y, const std::array<double, 3>& rgb) {
    if (x < 0 || y < 0 || x >= static_cast<long>(img.width()) || y >= static_cast<long>(img.height())) return;
    for (std::size_t c = 0; c < 3; ++c) img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = rgb[c];
}

void line(Image& img, long x0, long y0, long x1, long y1, const std::array<double, 3>& rgb) {
    const long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    long err = dx + dy;
    for (;;) {
        put(img, x0, y0, rgb);
        put(img, x0, y0 + 1, rgb);
        if (x0 == x1 && y0 == y1) break;
        const long e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void axes(Image& img) {
    const std::array<double, 3> black{0.0, 0.0, 0.0};
    const long w = static_cast<long>(img.width()), h = static_cast<long>(img.height());
    const long m = static_cast<long>(kMargin);
    line(img, m, h - m, w - m / 2, h - m, black);
    line(img, m, h - m, m, m / 2, black);
}

}  // namespace

Image line_plot(std::span<const Series> series, std::size_t width, std::size_t height) {
    Image img({height, width}, 3, 1.0);
    axes(img);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (const auto& [x, y] : s) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (!(xmin <= xmax)) return img;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) ymax = ymin + 1.0;
    const double plot_w = static_cast<double>(width - kMargin - kMargin / 2);
    const double plot_h = static_cast<double>(height - kMargin - kMargin / 2);
    auto px = [&](double x) { return static_cast<long>(kMargin + (x - xmin) / (xmax - xmin) * plot_w); };
    auto py = [&](double y) {
        return static_cast<long>(static_cast<double>(height - kMargin) - (y - ymin) / (ymax - ymin) * plot_h);
    };
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& color = kPalette[i % kPalette.size()];
        for (std::size_t k = 1; k < series[i].size(); ++k) {
            const auto& [x0, y0] = series[i][k - 1];
            const auto& [x1, y1] = series[i][k];
            line(img, px(x0), py(y0), px(x1), py(y1), color);
        }
        if (series[i].size() == 1) put(img, px(series[i][0].first), py(series[i][0].second), color);
    }
    return img;
}

Image bar_plot(std::span<const double> values, std::size_t width, std::size_t height) {
    Image img({height, width}, 3, 1.0);
    axes(img);
    if (values.empty()) return img;
    const double vmax = std::max(1e-12, *std::max_element(values.begin(), values.end()));
    const double plot_w = static_cast<double>(width - kMargin - kMargin / 2);
    const double plot_h = static_cast<double>(height - kMargin - kMargin / 2);
    const double bar_w = plot_w / static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const long x0 = static_cast<long>(kMargin + bar_w * static_cast<double>(i) + 1);
        const long x1 = static_cast<long>(kMargin + bar_w * static_cast<double>(i + 1) - 1);
        const long top = static_cast<long>(static_cast<double>(height - kMargin) - values[i] / vmax * plot_h);
        for (long x = x0; x <= x1; ++x) {
            for (long y = top; y < static_cast<long>(height - kMargin); ++y) put(img, x, y, kPalette[0]);
        }
    }
    return img;
}

}  // namespace arreid
