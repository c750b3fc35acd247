#include "arreid/patch_mixup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>

#include "arreid/error.hpp"

namespace arreid {

void MixupConfig::validate() const {
    if (!(ar_low <= ar_high)) throw Error(ErrorKind::config, "mixup ar_range low must not exceed high");
    if (!(image_fraction >= 0.0 && image_fraction <= 1.0) || !(patch_fraction >= 0.0 && patch_fraction <= 1.0)) {
        throw Error(ErrorKind::config, "mixup fractions must lie in [0, 1]");
    }
    if (!(distance_scale > 0.0)) throw Error(ErrorKind::config, "mixup distance_scale must be positive");
    if (patch_size == 0) throw Error(ErrorKind::config, "mixup patch_size must be positive");
}

Matrix pairwise_patch_distances(const PatchGrid& grid, DistanceUnit unit, Exec exec) {
    Matrix points(grid.n, 2);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const auto& p = grid.positions[i];
        points(i, 0) = static_cast<double>(unit == DistanceUnit::grid ? p.col : p.x);
        points(i, 1) = static_cast<double>(unit == DistanceUnit::grid ? p.row : p.y);
    }
    Matrix out(grid.n, grid.n);
    kernels::euclidean_distances(exec, points, out.view());
    return out;
}

Matrix attention_scores(const Matrix& distances, double distance_scale) {
    Matrix out(distances.rows(), distances.cols());
    for (std::size_t i = 0; i < distances.rows(); ++i) {
        for (std::size_t j = 0; j < distances.cols(); ++j) out(i, j) = attention_score(distances(i, j), distance_scale);
    }
    return out;
}

std::size_t fraction_count(double fraction, std::size_t n) {
    const double raw = fraction * static_cast<double>(n);
    const auto count = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    return std::min(count, n);
}

MixupPlan build_mixup_plan(const PatchGrid& grid, const MixupConfig& config, Rng& rng) {
    MixupPlan plan;
    const std::size_t k = fraction_count(config.patch_fraction, grid.n);
    if (k == 0) return plan;
    plan.selected = rng.sample_without_replacement(grid.n, k);
    const std::vector<std::size_t> order = rng.permutation(k);
    plan.partners.resize(k);
    plan.weights.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t c = plan.selected[i];
        const std::size_t partner = plan.selected[order[i]];
        const auto& a = grid.positions[c];
        const auto& b = grid.positions[partner];
        const double dr = static_cast<double>(a.row) - static_cast<double>(b.row);
        const double dc = static_cast<double>(a.col) - static_cast<double>(b.col);
        plan.partners[i] = partner;
        plan.weights[i] = attention_score(std::sqrt(dr * dr + dc * dc), config.distance_scale);
    }
    return plan;
}

Image apply_patch_mixup(const Image& image, const PatchGrid& grid, const MixupPlan& plan) {
    if (grid.shape != image.shape()) throw Error(ErrorKind::shape, "patch grid was built for a different image size");
    if (grid.spec.overlapping()) {
        throw Error(ErrorKind::overlapping_grid, "patch mixup needs non-overlapping patches (stride >= patch size)");
    }
    if (plan.partners.size() != plan.selected.size() || plan.weights.size() != plan.selected.size()) {
        throw Error(ErrorKind::shape, "mixup plan vectors differ in length");
    }
    Image out = image;
    const std::size_t ph = grid.spec.patch_h;
    const std::size_t pw = grid.spec.patch_w;
    for (std::size_t k = 0; k < plan.selected.size(); ++k) {
        const double a = plan.weights[k];
        const auto& dst = grid.positions.at(plan.selected[k]);
        const auto& src = grid.positions.at(plan.partners[k]);
        for (std::size_t dy = 0; dy < ph; ++dy) {
            for (std::size_t dx = 0; dx < pw; ++dx) {
                for (std::size_t ch = 0; ch < image.channels(); ++ch) {
                    const double own = image.at(dst.y + dy, dst.x + dx, ch);
                    const double other = image.at(src.y + dy, src.x + dx, ch);
                    out.at(dst.y + dy, dst.x + dx, ch) = std::clamp((1.0 - a) * own + a * other, 0.0, 1.0);
                }
            }
        }
    }
    return out;
}

AugmentedBatch augment_batch_with_plans(std::span<const Image> images, const MixupConfig& config,
                                        std::uint64_t stream, Exec exec) {
    config.validate();
    AugmentedBatch result;
    result.images.assign(images.begin(), images.end());
    result.plans.resize(images.size());

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const double ar = images[i].shape().aspect_ratio();
        if (ar >= config.ar_low && ar <= config.ar_high) eligible.push_back(i);
    }
    const std::size_t chosen_count = fraction_count(config.image_fraction, eligible.size());
    if (chosen_count == 0 || fraction_count(config.patch_fraction, 1) == 0) return result;

    const std::uint64_t base = config.seed ^ Rng::mix(stream);
    Rng picker = Rng::split(base, 0);
    std::vector<std::size_t> chosen;
    for (std::size_t pos : picker.sample_without_replacement(eligible.size(), chosen_count)) {
        chosen.push_back(eligible[pos]);
    }
    std::sort(chosen.begin(), chosen.end());

    const PatchSpec spec{config.patch_size, config.patch_size, config.patch_size, config.patch_size};
    auto mix_one = [&](std::size_t j) {
        const std::size_t b = chosen[j];
        const PatchGrid grid = compute_patch_grid(images[b].shape(), spec);
        Rng rng = Rng::split(base, b + 1);
        MixupPlan plan = build_mixup_plan(grid, config, rng);
        result.images[b] = apply_patch_mixup(images[b], grid, plan);
        result.plans[b] = std::move(plan);
    };

    if (exec == Exec::parallel) {
        const auto n = static_cast<std::int64_t>(chosen.size());
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t j = 0; j < n; ++j) {
            try {
                mix_one(static_cast<std::size_t>(j));
            } catch (...) {
#pragma omp critical
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::size_t j = 0; j < chosen.size(); ++j) mix_one(j);
    }
    return result;
}

std::vector<Image> augment_batch(std::span<const Image> images, const MixupConfig& config, std::uint64_t stream,
                                 Exec exec) {
    return augment_batch_with_plans(images, config, stream, exec).images;
}

}  // namespace arreid
