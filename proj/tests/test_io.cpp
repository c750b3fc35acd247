#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "arreid/error.hpp"
#include "arreid/feature_store.hpp"
#include "arreid/manifest.hpp"
#include "arreid/model_io.hpp"
#include "arreid/plot.hpp"
#include "arreid/png_io.hpp"
#include "arreid/run_config.hpp"
#include "helpers.hpp"

using namespace arreid;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "arreid_test_io";
    fs::create_directories(dir);
    return dir / name;
}

FeatureStore random_store(Rng& rng) {
    FeatureStore s;
    s.dim = static_cast<std::uint32_t>(1 + rng.below(32));
    s.model_ar = static_cast<float>(rng.uniform(0.5, 2.0));
    const std::size_t n = rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
        FeatureRecord r{rng.engine()(), static_cast<std::uint32_t>(rng.engine()()), std::vector<float>(s.dim)};
        for (auto& v : r.feature) v = static_cast<float>(rng.normal());
        s.records.push_back(std::move(r));
    }
    return s;
}

ErrorKind kind_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::config;
}

}  // namespace

TEST_CASE("manifest parsing") {
    std::istringstream in(R"({"path": "a.png", "vehicle_id": 3, "camera_id": 1, "width": 120, "height": 90}

{"path": "b.png", "vehicle_id": 4, "camera_id": 2, "width": 60, "height": 60}
)");
    const auto m = parse_manifest(in, "/data");
    REQUIRE(m.entries.size() == 2);
    CHECK(m.entries[0] == ManifestEntry{"a.png", 3, 1, 120, 90});
    CHECK(m.entries[0].shape() == ImageShape{90, 120});
    CHECK(m.resolve(m.entries[1]) == fs::path("/data/b.png"));

    auto parse_error_line = [](const std::string& text) {
        std::istringstream s(text);
        try {
            parse_manifest(s);
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::parse);
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(parse_error_line("{\"path\": \"a.png\", \"vehicle_id\": 1, \"camera_id\": 0, \"width\": 5}\n")
              .find("line 1") != std::string::npos);
    const std::string two_good = R"({"path": "a.png", "vehicle_id": 1, "camera_id": 0, "width": 5, "height": 5}
{"path": "a.png", "vehicle_id": 2, "camera_id": 0, "width": 5, "height": 5}
)";
    CHECK(parse_error_line(two_good).find("line 2") != std::string::npos);
    CHECK(parse_error_line("{not json\n").find("line 1") != std::string::npos);
    CHECK(parse_error_line(R"({"path": "a.png", "vehicle_id": 1, "camera_id": 0, "width": 0, "height": 5})")
              .find("line 1") != std::string::npos);

    const fs::path path = scratch("m.jsonl");
    write_manifest(path, m);
    const auto back = load_manifest(path);
    CHECK(back.entries == m.entries);
    CHECK(back.base_dir == path.parent_path());
    CHECK(kind_of([] { load_manifest("/nonexistent/m.jsonl"); }) == ErrorKind::io);
}

TEST_CASE("feature store round trip") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const FeatureStore s = random_store(rng);
        const auto bytes = serialize_feature_store(s);
        CHECK(bytes.size() == 24 + s.records.size() * (12 + 4 * std::size_t{s.dim}));
        CHECK(bytes.size() == s.byte_size());
        const FeatureStore back = deserialize_feature_store(bytes);
        CHECK(back == s);
        CHECK(serialize_feature_store(back) == bytes);
    }

    FeatureStore s{2, 1.5f, {{7, 3, {1.0f, -2.0f}}}};
    const auto bytes = serialize_feature_store(s);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "RFV1");
    CHECK(bytes[4] == 1);   // version, little-endian
    CHECK(bytes[8] == 2);   // dim
    CHECK(bytes[12] == 1);  // count
    CHECK(bytes[24] == 7);  // first vehicle id

    const fs::path path = scratch("s.rfv");
    write_feature_store(path, s);
    CHECK(fs::file_size(path) == s.byte_size());
    CHECK(read_feature_store(path) == s);
}

TEST_CASE("feature store rejects malformed input") {
    FeatureStore s{2, 1.0f, {{1, 0, {1.0f, 2.0f}}, {2, 0, {3.0f, 4.0f}}}};
    const auto good = serialize_feature_store(s);

    auto bad_magic = good;
    bad_magic[0] = 'X';
    CHECK(kind_of([&] { deserialize_feature_store(bad_magic); }) == ErrorKind::format);

    auto bad_version = good;
    bad_version[4] = 9;
    CHECK(kind_of([&] { deserialize_feature_store(bad_version); }) == ErrorKind::format);

    auto truncated = good;
    truncated.pop_back();
    CHECK(kind_of([&] { deserialize_feature_store(truncated); }) == ErrorKind::format);

    auto zero_dim = good;
    zero_dim[8] = 0;
    CHECK(kind_of([&] { deserialize_feature_store(zero_dim); }) == ErrorKind::format);

    FeatureStore ragged{3, 1.0f, {{1, 0, {1.0f}}}};
    CHECK(kind_of([&] { serialize_feature_store(ragged); }) == ErrorKind::shape);
}

TEST_CASE("feature store and feature set conversions") {
    Rng rng(2);
    FeatureSet set{arreid::testing::random_matrix(rng, 4, 3), {1, 2, 3, 4}, {0, 1, 0, 1}};
    const FeatureStore s = to_feature_store(set, 1.25f);
    CHECK(s.dim == 3);
    CHECK(s.model_ar == 1.25f);
    const FeatureSet back = to_feature_set(s);
    CHECK(back.vehicle_ids == set.vehicle_ids);
    CHECK(back.camera_ids == set.camera_ids);
    for (std::size_t i = 0; i < 12; ++i) CHECK(back.features.values()[i] == static_cast<float>(set.features.values()[i]));
}

TEST_CASE("run config json round trip and hash") {
    RunConfig c;
    c.seed = 99;
    c.mixup.ar_low = 0.7;
    c.policy.thresholds = {{0.2, 1.5}, {0.5, 1.1}};
    c.protocol.distance = Distance::squared_euclidean;
    c.protocol.cmc_ranks = {1, 3};
    c.toy_vit.short_side_stride = 12;
    c.train.use_mixup = true;
    c.resize.targets = {{64, 85, 1.33}};
    const nlohmann::json j = c;
    CHECK(j.get<RunConfig>() == c);
    CHECK(config_hash(c) == config_hash(j.get<RunConfig>()));
    CHECK(config_hash(c).size() == 16);
    RunConfig d = c;
    d.seed = 100;
    CHECK(config_hash(c) != config_hash(d));

    const fs::path path = scratch("config.json");
    save_json(path, {{"seed", 5}, {"train", {{"steps", 7}}}});
    const RunConfig partial = load_run_config(path);
    CHECK(partial.seed == 5);
    CHECK(partial.train.steps == 7);
    CHECK(partial.train.lr == TrainConfig{}.lr);

    save_json(path, {{"train", {{"steps", "many"}}}});
    CHECK(kind_of([&] { load_run_config(path); }) == ErrorKind::config);
    save_json(path, {{"protocol", {{"distance", "manhattan"}}}});
    CHECK(kind_of([&] { load_run_config(path); }) == ErrorKind::config);
    {
        std::ofstream(path) << "{ not json";
    }
    CHECK(kind_of([&] { load_run_config(path); }) == ErrorKind::parse);

    save_json(path, {{"thresholds", {{0.3, 1.3}, {0.6, 1.0}}}, {"default_weight", 0.9}});
    CHECK(load_policy(path) == FusionPolicy{});
}

TEST_CASE("png round trip within 8-bit quantization") {
    Rng rng(3);
    const Image img = arreid::testing::random_image(rng, {17, 23});
    const fs::path path = scratch("img.png");
    write_png(path, img, {{"seed", "4"}});
    const Image back = read_png(path);
    REQUIRE(back.shape() == img.shape());
    for (std::size_t i = 0; i < img.pixels().size(); ++i) CHECK(std::abs(back.pixels()[i] - img.pixels()[i]) <= 0.5 / 255 + 1e-12);

    // identical inputs give identical bytes
    const fs::path other = scratch("img2.png");
    write_png(other, img, {{"seed", "4"}});
    std::ifstream a(path, std::ios::binary), b(other, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    {
        std::ofstream(scratch("bad.png")) << "not a png";
    }
    CHECK(kind_of([&] { read_png(scratch("bad.png")); }) == ErrorKind::format);
}

TEST_CASE("plots") {
    const std::vector<Series> curves{{{0, 1}, {1, 0.5}, {2, 0.25}}};
    const Image line = line_plot(curves, 200, 100);
    CHECK(line.shape() == ImageShape{100, 200});
    const std::vector<double> bars{1, 3, 2};
    const Image bar = bar_plot(bars, 120, 80);
    CHECK(bar.shape() == ImageShape{80, 120});
    bool has_ink = false;
    for (double v : bar.pixels()) has_ink |= v < 0.5;
    CHECK(has_ink);
}

TEST_CASE("model params round trip") {
    ToyViTConfig c;
    c.patch_spec = {8, 8, 8, 6};
    c.embed_dim = 8;
    c.heads = 2;
    c.layers = 1;
    c.seed = 3;
    const ModelParams p = init_params(c, {16, 24}, {10, 20, 30}, 3, 1.33);
    const fs::path path = scratch("model.bin");
    save_params(path, p);
    const ModelParams back = load_params(path);
    CHECK(back.values == p.values);
    CHECK(back.config == p.config);
    CHECK(back.class_labels == p.class_labels);
    CHECK(back.model_ar == 1.33);
    CHECK(back.input_shape == p.input_shape);

    {
        std::ofstream(scratch("junk.bin")) << "JUNKJUNKJUNK";
    }
    CHECK(kind_of([&] { load_params(scratch("junk.bin")); }) == ErrorKind::format);
}
