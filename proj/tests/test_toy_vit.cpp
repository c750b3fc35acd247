#include <doctest.h>

#include <cmath>
#include <numeric>

#include "arreid/error.hpp"
#include "arreid/synthetic.hpp"
#include "arreid/toy_vit.hpp"
#include "helpers.hpp"

using namespace arreid;
using arreid::testing::random_image;

namespace {

ToyViTConfig small_config(std::uint64_t seed = 1) {
    ToyViTConfig c;
    c.patch_spec = {8, 8, 8, 8};
    c.embed_dim = 16;
    c.layers = 2;
    c.heads = 2;
    c.seed = seed;
    return c;
}

double mean(const std::vector<double>& v, std::size_t b, std::size_t e) {
    return std::accumulate(v.begin() + b, v.begin() + e, 0.0) / double(e - b);
}

}  // namespace

TEST_CASE("parameter count") {
    const ToyViTConfig c = small_config();
    const std::size_t d = 16, hidden = 32, pp = 8 * 8 * 3, classes = 5, n = 16;
    const std::size_t per_layer = 2 * d + d * 3 * d + 3 * d + d * d + d + 2 * d + d * hidden + hidden + hidden * d + d;
    const std::size_t expect = pp * d + d + d + (n + 1) * d + 2 * per_layer + 2 * d + d * classes;
    CHECK(parameter_count(c, {32, 32}, 3, classes) == expect);

    const auto p = init_params(c, {32, 32}, {4, 1, 3, 0, 2, 2});
    CHECK(p.values.size() == expect);
    CHECK(p.class_labels == std::vector<std::uint64_t>{0, 1, 2, 3, 4});

    // A smaller stride only grows the positional table.
    ToyViTConfig fine = c;
    fine.patch_spec.stride_w = 4;
    const std::size_t n_fine = compute_patch_grid({32, 32}, fine.patch_spec).n;
    CHECK(parameter_count(fine, {32, 32}, 3, classes) == expect + (n_fine - n) * d);
}

TEST_CASE("uneven stride on the shorter side") {
    ToyViTConfig c = small_config();
    c.short_side_stride = 6;
    CHECK(c.spec_for({32, 48}).stride_h == 6);
    CHECK(c.spec_for({32, 48}).stride_w == 8);
    CHECK(c.spec_for({48, 32}).stride_w == 6);
    CHECK(c.spec_for({32, 32}) == c.patch_spec);
}

TEST_CASE("extract_patches") {
    Rng rng(1);
    const Image img = random_image(rng, {16, 24});
    const Matrix p = extract_patches(img, {8, 8, 8, 8});
    CHECK(p.rows() == 6);
    CHECK(p.cols() == 192);
    CHECK(p(4, 0) == img.at(8, 8, 0));
    CHECK(p(4, 1 * 24 + 3 * 3 + 2) == img.at(9, 11, 2));
}

TEST_CASE("forward output is finite and deterministic") {
    Rng rng(2);
    const auto p = init_params(small_config(), {32, 40}, {0, 1, 2});
    for (int t = 0; t < 20; ++t) {
        const Image img = random_image(rng, {32, 40});
        const auto f = forward(p, img);
        CHECK(f.size() == 16);
        for (double v : f) CHECK(std::isfinite(v));
        CHECK(forward(p, img) == f);
    }
    const Image zeros({32, 40}, 3, 0.0), ones({32, 40}, 3, 1.0);
    for (double v : forward(p, zeros)) CHECK(std::isfinite(v));
    for (double v : forward(p, ones)) CHECK(std::isfinite(v));

    std::vector<Image> batch;
    for (int i = 0; i < 6; ++i) batch.push_back(random_image(rng, {32, 40}));
    CHECK(embed(p, batch, Exec::serial) == embed(p, batch, Exec::parallel));
    CHECK_THROWS_AS(forward(p, random_image(rng, {32, 32})), Error);
}

TEST_CASE("model gradient matches finite differences on a parameter slice") {
    Rng rng(3);
    const auto data = synthesize_dataset(2, 2, {16, 16}, 5);
    ToyViTConfig c = small_config(9);
    c.embed_dim = 8;
    const auto params = init_params(c, {16, 16}, data.labels);
    const auto fn = model_objective(params, data.images, data.labels);

    std::vector<std::size_t> coords;
    for (int i = 0; i < 10; ++i) coords.push_back(rng.below(params.values.size()));
    // make sure every tensor family shows up at least once
    coords.push_back(params.layout.proj_w.offset + 3);
    coords.push_back(params.layout.layers[0].wqkv.offset + 5);
    coords.push_back(params.layout.layers[1].ln2_g.offset + 1);
    coords.push_back(params.layout.head.offset);
    const auto report = finite_difference_check(fn, params.values, 1e-4, 1e-3, coords);
    CHECK(report.checked > 0);
    CHECK(report.max_relative_error < 1e-3);

    std::vector<double> g1, g2;
    loss_and_gradient(params, data.images, data.labels, &g1, Exec::serial);
    loss_and_gradient(params, data.images, data.labels, &g2, Exec::parallel);
    CHECK(g1 == g2);
}

TEST_CASE("zero learning rate keeps the loss trace constant") {
    const auto data = synthesize_dataset(2, 2, {16, 16}, 1);
    auto params = init_params(small_config(), {16, 16}, data.labels);
    TrainConfig t;
    t.steps = 5;
    t.lr = 0.0;
    t.P = 2;
    t.K = 2;
    const auto before = params.values;
    const auto trace = train_steps(params, data, t);
    CHECK(params.values == before);
    for (double v : trace.total) CHECK(v == trace.total.front());
}

TEST_CASE("training is reproducible and lowers the loss") {
    // 8 identities, default optimizer: lr 0.01, 200 steps
    const auto data = synthesize_dataset(8, 8, {24, 24}, 3);
    const TrainConfig t;
    REQUIRE(t.lr == 0.01);
    REQUIRE(t.steps == 200);

    auto a = init_params(small_config(4), {24, 24}, data.labels);
    auto b = a;
    const auto ta = train_steps(a, data, t);
    const auto tb = train_steps(b, data, t, nullptr, Exec::serial);
    CHECK(ta.total == tb.total);
    CHECK(a.values == b.values);
    CHECK(mean(ta.total, 180, 200) < mean(ta.total, 0, 20));

    // still trains with patch mixup switched on
    MixupConfig mix;
    mix.patch_size = 8;
    mix.seed = 2;
    TrainConfig tmix = t;
    tmix.use_mixup = true;
    auto m = init_params(small_config(4), {24, 24}, data.labels);
    const auto tm = train_steps(m, data, tmix, &mix);
    CHECK(mean(tm.total, 180, 200) < mean(tm.total, 0, 20));
    CHECK(tm.total != ta.total);
}

TEST_CASE("gradient clipping bounds the update") {
    const auto data = synthesize_dataset(4, 4, {24, 24}, 3);
    const auto start = init_params(small_config(4), {24, 24}, data.labels);
    TrainConfig t;
    t.steps = 1;
    t.lr = 1.0;
    t.momentum = 0.0;
    t.weight_decay = 0.0;
    auto step_norm = [&](double clip) {
        t.grad_clip = clip;
        auto p = start;
        train_steps(p, data, t);
        double sq = 0.0;
        for (std::size_t k = 0; k < p.values.size(); ++k) sq += std::pow(p.values[k] - start.values[k], 2);
        return std::sqrt(sq);
    };
    const double raw = step_norm(0.0);
    REQUIRE(raw > 1e-3);
    CHECK(step_norm(raw * 2.0) == doctest::Approx(raw).epsilon(1e-12));
    CHECK(step_norm(raw / 4.0) == doctest::Approx(raw / 4.0).epsilon(1e-9));
    t.grad_clip = -1.0;
    CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("training input validation") {
    const auto data = synthesize_dataset(2, 2, {16, 16}, 1);
    auto params = init_params(small_config(), {16, 16}, data.labels);
    TrainConfig t;
    t.P = 3;
    t.K = 2;
    try {
        train_steps(params, data, t);
        FAIL("expected degenerate dataset");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate_dataset);
    }
    t.P = 1;
    CHECK_THROWS_AS(train_steps(params, data, t), Error);
    ToyViTConfig bad = small_config();
    bad.heads = 3;
    CHECK_THROWS_AS(init_params(bad, {16, 16}, data.labels), Error);
}

TEST_CASE("synthetic identities are distinct") {
    const auto a = render_instance(3, 0, {32, 48}, 7);
    CHECK(a == render_instance(3, 0, {32, 48}, 7));
    CHECK(a != render_instance(3, 1, {32, 48}, 7));
    for (double v : a.pixels()) CHECK((v >= 0.0 && v <= 1.0));
    const auto data = synthesize_dataset(3, 2, {16, 16}, 1);
    CHECK(data.labels == std::vector<std::uint64_t>{0, 0, 1, 1, 2, 2});
}
