#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "arreid/error.hpp"
#include "arreid/patch_geometry.hpp"
#include "arreid/rng.hpp"

using namespace arreid;

namespace {

// Walk origins 0, s, 2s, ... while the patch still fits.
std::size_t enumerate_origins(std::size_t dim, std::size_t patch, std::size_t stride) {
    std::size_t count = 0;
    for (std::size_t o = 0; o + patch <= dim; o += stride) ++count;
    return count;
}

double sse_of_partition(const std::vector<double>& v, const std::vector<int>& side) {
    double total = 0.0;
    for (int g = 0; g < 2; ++g) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (side[i] == g) sum += v[i], ++n;
        if (n == 0) return std::numeric_limits<double>::infinity();
        const double mean = sum / static_cast<double>(n);
        for (std::size_t i = 0; i < v.size(); ++i)
            if (side[i] == g) total += (v[i] - mean) * (v[i] - mean);
    }
    return total;
}

}  // namespace

TEST_CASE("patch grid examples") {
    auto g = compute_patch_grid({224, 224}, PatchSpec::square(16, 16, 16));
    CHECK(g.n_y == 14);
    CHECK(g.n_x == 14);
    CHECK(g.n == 196);

    g = compute_patch_grid({16, 16}, PatchSpec::square(16, 16, 16));
    CHECK(g.n == 1);

    g = compute_patch_grid({224, 298}, PatchSpec::square(16, 16, 12));
    CHECK(g.n_y == 14);
    CHECK(g.n_x == 24);
    CHECK(g.n == 336);

    CHECK(compute_patch_grid({384, 384}, PatchSpec::square(16, 12, 12)).n == 961);
}

TEST_CASE("patch grid matches origin enumeration and stays in bounds") {
    Rng rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t H = 16 + rng.below(200), W = 16 + rng.below(200);
        const std::size_t p = 1 + rng.below(16);
        const PatchSpec spec{p, p, 1 + rng.below(20), 1 + rng.below(20)};
        const PatchGrid g = compute_patch_grid({H, W}, spec);
        REQUIRE(g.n_y == enumerate_origins(H, p, spec.stride_h));
        REQUIRE(g.n_x == enumerate_origins(W, p, spec.stride_w));
        REQUIRE(g.positions.size() == g.n);
        for (const auto& pos : g.positions) {
            REQUIRE(pos.y + spec.patch_h <= H);
            REQUIRE(pos.x + spec.patch_w <= W);
            REQUIRE(pos.y == pos.row * spec.stride_h);
            REQUIRE(pos.x == pos.col * spec.stride_w);
        }
    }
}

TEST_CASE("invalid geometry names the offending dimension") {
    try {
        compute_patch_grid({8, 64}, PatchSpec::square(16, 16, 16));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_geometry);
        CHECK(std::string(e.what()).find("height") != std::string::npos);
    }
    try {
        compute_patch_grid({64, 64}, PatchSpec{16, 16, 16, 0});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::invalid_geometry);
        CHECK(std::string(e.what()).find("width") != std::string::npos);
    }
    // A stride longer than the image is fine: one patch along that axis.
    CHECK(compute_patch_grid({64, 64}, PatchSpec{16, 16, 65, 16}).n_y == 1);
}

TEST_CASE("k-means examples") {
    const std::vector<double> constant(6, 1.0);
    CHECK(kmeans_1d(constant, 1).centers == std::vector<double>{1.0});

    const std::vector<double> two{0.5, 0.5, 2.0, 2.0};
    CHECK(kmeans_1d(two, 2).centers == std::vector<double>{0.5, 2.0});

    const std::vector<double> three{1.0, 0.95, 1.33};
    CHECK(kmeans_1d(three, 3).centers == std::vector<double>{0.95, 1.0, 1.33});

    CHECK_THROWS_AS(kmeans_1d(std::vector<double>{}, 1), Error);
    try {
        kmeans_1d(two, 3);
        FAIL("expected infeasible k");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::infeasible_k);
    }
}

TEST_CASE("k=2 matches brute force over all 2-partitions") {
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + rng.below(9);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(0.5, 2.0);

        double best = std::numeric_limits<double>::infinity();
        for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
            std::vector<int> side(n);
            for (std::size_t i = 0; i < n; ++i) side[i] = (mask >> i) & 1;
            best = std::min(best, sse_of_partition(v, side));
        }
        const auto km = kmeans_1d(v, 2, trial);
        CHECK(within_cluster_sse(v, km.assignment, km.centers) == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("k-means SSE never increases and ends at a local optimum") {
    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 10 + rng.below(60);
        std::vector<double> v(n);
        for (auto& x : v) x = rng.uniform(0.4, 2.5);
        const std::size_t k = 1 + rng.below(5);
        const auto km = kmeans_1d(v, k, trial);

        REQUIRE(km.centers.size() == k);
        REQUIRE(std::is_sorted(km.centers.begin(), km.centers.end()));
        for (std::size_t i = 1; i < km.sse_trace.size(); ++i) CHECK(km.sse_trace[i] <= km.sse_trace[i - 1] + 1e-12);

        // No single-point move lowers the objective (centers recomputed as means).
        const double sse = within_cluster_sse(v, km.assignment, km.centers);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c) {
                if (c == km.assignment[i]) continue;
                auto moved = km.assignment;
                moved[i] = c;
                std::vector<double> sum(k, 0.0), cnt(k, 0.0);
                for (std::size_t j = 0; j < n; ++j) sum[moved[j]] += v[j], cnt[moved[j]] += 1;
                if (cnt[km.assignment[i]] == 0) continue;
                std::vector<double> centers(k);
                for (std::size_t m = 0; m < k; ++m) centers[m] = sum[m] / cnt[m];
                CHECK(within_cluster_sse(v, moved, centers) >= sse - 1e-12);
            }
        }
    }
}

TEST_CASE("aspect-ratio stats") {
    std::vector<ImageShape> same(5, ImageShape{100, 100});
    auto s = aspect_ratio_stats(same, 1, 4);
    CHECK(s.mean_ar == 1.0);
    CHECK(s.median_ar == 1.0);
    CHECK(s.cluster_centers == std::vector<double>{1.0});
    CHECK(s.histogram.size() == 4);
    CHECK(s.histogram[0].count == 5);

    std::vector<ImageShape> shapes{{100, 50}, {100, 100}, {100, 150}, {100, 200}, {100, 200}};
    s = aspect_ratio_stats(shapes, 2, 3);
    CHECK(s.count == 5);
    CHECK(s.median_ar == 1.5);
    CHECK(s.mean_size.height == 100.0);
    CHECK(s.median_size.width == 150.0);
    // bins [0.5,1), [1,1.5), [1.5,2]; the maximum lands in the last bin
    CHECK(s.histogram[0].count == 1);
    CHECK(s.histogram[1].count == 1);
    CHECK(s.histogram[2].count == 3);
    std::size_t total = 0;
    for (const auto& b : s.histogram) total += b.count;
    CHECK(total == 5);

    CHECK_THROWS_AS(aspect_ratio_stats(std::vector<ImageShape>{}, 1, 4), Error);
}

TEST_CASE("aspect-ratio stats are permutation invariant") {
    Rng rng(9);
    std::vector<ImageShape> shapes;
    for (int i = 0; i < 60; ++i) shapes.push_back({40 + rng.below(200), 40 + rng.below(200)});
    const auto base = aspect_ratio_stats(shapes, 3, 8, 1);
    for (int t = 0; t < 5; ++t) {
        std::shuffle(shapes.begin(), shapes.end(), rng.engine());
        const auto s = aspect_ratio_stats(shapes, 3, 8, 1);
        CHECK(s.mean_ar == base.mean_ar);
        CHECK(s.median_ar == base.median_ar);
        CHECK(s.cluster_centers == base.cluster_centers);
        for (std::size_t b = 0; b < 8; ++b) CHECK(s.histogram[b].count == base.histogram[b].count);
    }
}

TEST_CASE("resize plan") {
    const std::vector<double> centers{1.0, 0.95, 1.33};
    const auto plan = plan_input_sizes(centers, 224);
    REQUIRE(plan.targets.size() == 3);
    CHECK(plan.targets[0] == ResizeTarget{224, 224, 1.0});
    CHECK(plan.targets[1] == ResizeTarget{224, 213, 0.95});
    CHECK(plan.targets[2] == ResizeTarget{224, 298, 1.33});

    CHECK(plan_input_sizes(std::vector<double>{1.0}, 384).targets[0] == ResizeTarget{384, 384, 1.0});
    CHECK(plan_input_sizes(std::vector<double>{0.8}, 384).targets[0] == ResizeTarget{384, 307, 0.8});

    // Too small to express the ratio to within 1e-2.
    CHECK_THROWS_AS(plan_input_sizes(std::vector<double>{1.33}, 10), Error);
    CHECK_THROWS_AS(plan_input_sizes(std::vector<double>{-1.0}, 224), Error);
}
