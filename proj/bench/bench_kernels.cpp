#include <benchmark/benchmark.h>

#include "arreid/kernels.hpp"
#include "arreid/patch_mixup.hpp"
#include "arreid/reid_eval.hpp"
#include "arreid/rng.hpp"

using namespace arreid;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, cols);
    for (auto& v : m.values()) v = rng.normal();
    return m;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
    Matrix c(n, n);
    for (auto _ : state) {
        kernels::gemm(exec_of(state), a, b, c.view());
        benchmark::DoNotOptimize(c.values().data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

void BM_SquaredDistances(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Matrix x = random_matrix(n, 64, 3);
    Matrix d(n, n);
    for (auto _ : state) {
        kernels::squared_distances(exec_of(state), x, d.view());
        benchmark::DoNotOptimize(d.values().data());
    }
}

void BM_Evaluate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    FeatureSet q{random_matrix(n / 4, 64, 4), {}, {}}, g{random_matrix(n, 64, 5), {}, {}};
    for (std::size_t i = 0; i < q.size(); ++i) q.vehicle_ids.push_back(i % 50), q.camera_ids.push_back(0);
    for (std::size_t i = 0; i < g.size(); ++i) g.vehicle_ids.push_back(i % 50), g.camera_ids.push_back(1);
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(q, g, {}, exec_of(state)).mAP);
}

void BM_Augment(benchmark::State& state) {
    Rng rng(6);
    std::vector<Image> images;
    for (std::int64_t i = 0; i < state.range(0); ++i) {
        Image img({224, 224}, 3);
        for (auto& v : img.pixels()) v = rng.uniform();
        images.push_back(std::move(img));
    }
    MixupConfig cfg;
    cfg.image_fraction = 1.0;
    for (auto _ : state) benchmark::DoNotOptimize(augment_batch(images, cfg, 0, exec_of(state)).size());
}

}  // namespace

BENCHMARK(BM_Gemm)->ArgsProduct({{64, 256}, {0, 1}});
BENCHMARK(BM_SquaredDistances)->ArgsProduct({{256, 1024}, {0, 1}});
BENCHMARK(BM_Evaluate)->ArgsProduct({{400, 2000}, {0, 1}});
BENCHMARK(BM_Augment)->ArgsProduct({{16}, {0, 1}});

BENCHMARK_MAIN();
