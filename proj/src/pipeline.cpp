#include "arreid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "arreid/feature_store.hpp"
#include "arreid/fusion.hpp"
#include "arreid/losses.hpp"
#include "arreid/manifest.hpp"
#include "arreid/model_io.hpp"
#include "arreid/patch_geometry.hpp"
#include "arreid/patch_mixup.hpp"
#include "arreid/plot.hpp"
#include "arreid/png_io.hpp"
#include "arreid/reid_eval.hpp"
#include "arreid/rng.hpp"
#include "arreid/run_config.hpp"
#include "arreid/synthetic.hpp"
#include "arreid/toy_vit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace arreid {

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
};

// Resolved run configuration plus the provenance stamped on every artifact.
struct RunContext {
    RunConfig config;
    std::string hash;

    json stamp() const { return {{"config_hash", hash}, {"seed", config.seed}}; }
    std::map<std::string, std::string> png_text() const {
        return {{"config_hash", hash}, {"seed", std::to_string(config.seed)}};
    }
    std::string csv_comment() const { return "# config_hash=" + hash + ",seed=" + std::to_string(config.seed) + "\n"; }
    // Component seeds are combined with the top-level seed.
    std::uint64_t derived(std::uint64_t component, std::uint64_t salt = 0) const {
        return component ^ Rng::mix(config.seed + salt);
    }
};

RunContext make_context(const Common& common) {
    RunContext ctx;
    if (!common.config_path.empty()) ctx.config = load_run_config(common.config_path);
    if (common.seed) ctx.config.seed = *common.seed;
    ctx.hash = config_hash(ctx.config);
    return ctx;
}

fs::path prepare_out_dir(const Common& common) {
    fs::path dir(common.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << text;
}

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

void write_store_with_sidecar(const fs::path& path, const FeatureStore& store, const RunContext& ctx,
                              const json& extra = json::object()) {
    write_feature_store(path, store);
    json side = {{"run", ctx.stamp()}, {"dim", store.dim}, {"count", store.records.size()}, {"model_ar", store.model_ar}};
    side.update(extra);
    save_json(fs::path(path.string() + ".json"), side);
}

std::vector<Image> load_images(const DatasetManifest& manifest, std::optional<ImageShape> resize_to) {
    std::vector<Image> images;
    images.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        Image img = read_png(manifest.resolve(e));
        if (img.shape() != e.shape()) {
            throw Error(ErrorKind::shape, "image " + e.path + " is " + std::to_string(img.height()) + "x" +
                                              std::to_string(img.width()) + ", manifest says " +
                                              std::to_string(e.height) + "x" + std::to_string(e.width));
        }
        images.push_back(resize_to ? resize_bilinear(img, *resize_to) : std::move(img));
    }
    return images;
}

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end) {
    end = std::min(end, v.size());
    if (begin >= end) return 0.0;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += v[i];
    return s / static_cast<double>(end - begin);
}

// ---------------------------------------------------------------- synth

int cmd_synth(const Common& common, std::size_t ids, std::size_t instances, std::size_t queries, std::size_t gallery,
              std::ostream& out) {
    const RunContext ctx = make_context(common);
    const fs::path dir = prepare_out_dir(common);
    fs::create_directories(dir / "images");
    Rng shapes = Rng::split(ctx.config.seed, 0x5ba9e);
    const double centers[] = {0.95, 1.0, 1.33};

    auto emit = [&](DatasetManifest& m, const std::string& split, std::uint64_t id, std::uint64_t instance,
                    std::uint32_t camera) {
        const std::size_t h = 56 + shapes.below(33);
        const double ar = centers[shapes.below(3)] + shapes.uniform(-0.02, 0.02);
        const auto w = static_cast<std::size_t>(std::max(16L, std::lround(static_cast<double>(h) * ar)));
        const Image img = render_instance(id, instance, {h, w}, ctx.config.seed);
        const std::string name = "images/" + split + "_" + std::to_string(id) + "_" + std::to_string(instance) + ".png";
        write_png(dir / name, img, ctx.png_text());
        m.entries.push_back({name, id, camera, w, h});
    };

    DatasetManifest train, query, gal;
    for (std::uint64_t id = 0; id < ids; ++id) {
        for (std::uint64_t k = 0; k < instances; ++k) emit(train, "train", id, k, static_cast<std::uint32_t>(k % 4));
        for (std::uint64_t k = 0; k < queries; ++k) emit(query, "query", id, 1000 + k, 0);
        for (std::uint64_t k = 0; k < gallery; ++k) {
            emit(gal, "gallery", id, 2000 + k, static_cast<std::uint32_t>(1 + k % 3));
        }
    }
    write_manifest(dir / "train.jsonl", train);
    write_manifest(dir / "query.jsonl", query);
    write_manifest(dir / "gallery.jsonl", gal);
    out << json({{"run", ctx.stamp()},
                 {"train", train.entries.size()},
                 {"query", query.entries.size()},
                 {"gallery", gal.entries.size()}})
               .dump(2)
        << '\n';
    return 0;
}

// ---------------------------------------------------------------- stats / plan

int cmd_stats(const Common& common, const std::string& manifest_path, std::size_t k, std::size_t bins,
              std::ostream& out) {
    const RunContext ctx = make_context(common);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const AspectRatioStats stats = aspect_ratio_stats(manifest.shapes(), k, bins, ctx.config.seed);
    const fs::path dir = prepare_out_dir(common);

    json j = stats;
    j["run"] = ctx.stamp();
    save_json(dir / "stats.json", j);

    std::string csv = ctx.csv_comment() + "bin_lower,bin_upper,count\n";
    std::vector<double> counts;
    for (const auto& b : stats.histogram) {
        csv += num(b.lower) + "," + num(b.upper) + "," + std::to_string(b.count) + "\n";
        counts.push_back(static_cast<double>(b.count));
    }
    write_text(dir / "histogram.csv", csv);
    write_png(dir / "histogram.png", bar_plot(counts), ctx.png_text());
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_plan(const Common& common, const std::string& stats_path, const std::string& manifest_path, std::size_t k,
             std::size_t base_height, std::ostream& out) {
    const RunContext ctx = make_context(common);
    AspectRatioStats stats;
    if (!stats_path.empty()) {
        try {
            stats = load_json(stats_path).get<AspectRatioStats>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::parse, stats_path + ": " + e.what());
        }
    } else if (!manifest_path.empty()) {
        stats = aspect_ratio_stats(load_manifest(manifest_path).shapes(), k, 10, ctx.config.seed);
    } else {
        throw Error(ErrorKind::config, "plan needs --stats or --manifest");
    }
    const ResizePlan plan = plan_input_sizes(stats, base_height);
    json j = plan;
    j["base_height"] = base_height;
    j["run"] = ctx.stamp();
    save_json(prepare_out_dir(common) / "plan.json", j);
    out << j.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- augment

int cmd_augment(const Common& common, const std::string& manifest_path, std::ostream& out) {
    const RunContext ctx = make_context(common);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const std::vector<Image> images = load_images(manifest, std::nullopt);
    MixupConfig mixup = ctx.config.mixup;
    mixup.seed = ctx.derived(mixup.seed);
    const AugmentedBatch batch = augment_batch_with_plans(images, mixup);

    const fs::path dir = prepare_out_dir(common);
    fs::create_directories(dir / "images");
    DatasetManifest augmented;
    std::size_t mixed = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& e = manifest.entries[i];
        const std::string stem = "images/" + std::to_string(i) + "_" + fs::path(e.path).stem().string() + "_pm";
        write_png(dir / (stem + ".png"), batch.images[i], ctx.png_text());
        json side = {{"run", ctx.stamp()}, {"source", e.path}, {"mixed", batch.plans[i].has_value()}};
        if (batch.plans[i]) {
            side["plan"] = *batch.plans[i];
            ++mixed;
        }
        save_json(dir / (stem + ".json"), side);
        augmented.entries.push_back({stem + ".png", e.vehicle_id, e.camera_id, e.width, e.height});
    }
    write_manifest(dir / "augmented.jsonl", augmented);
    out << json({{"run", ctx.stamp()}, {"images", images.size()}, {"mixed", mixed}}).dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- train / extract

int cmd_train(const Common& common, const std::string& manifest_path, const std::string& plan_path,
              std::optional<std::size_t> only_target, std::ostream& out) {
    const RunContext ctx = make_context(common);
    ResizePlan plan = ctx.config.resize;
    if (!plan_path.empty()) {
        try {
            plan = load_json(plan_path).get<ResizePlan>();
        } catch (const json::exception& e) {
            throw Error(ErrorKind::parse, plan_path + ": " + e.what());
        }
    }
    if (plan.targets.empty()) plan.targets.push_back({64, 64, 1.0});
    std::optional<DatasetManifest> manifest;
    if (!manifest_path.empty()) manifest = load_manifest(manifest_path);

    const fs::path dir = prepare_out_dir(common);
    json models = json::array();
    for (std::size_t t = 0; t < plan.targets.size(); ++t) {
        if (only_target && *only_target != t) continue;
        const ResizeTarget& target = plan.targets[t];
        LabeledImages data;
        std::vector<std::uint32_t> cameras;
        if (manifest) {
            data.images = load_images(*manifest, target.shape());
            for (const auto& e : manifest->entries) {
                data.labels.push_back(e.vehicle_id);
                cameras.push_back(e.camera_id);
            }
        } else {
            data = synthesize_dataset(8, 8, target.shape(), ctx.config.seed);
            cameras.assign(data.labels.size(), 0);
        }

        ToyViTConfig vit = ctx.config.toy_vit;
        vit.seed = ctx.derived(vit.seed, t);
        MixupConfig mixup = ctx.config.mixup;
        mixup.seed = ctx.derived(mixup.seed, 100 + t);
        ModelParams params = init_params(vit, target.shape(), data.labels, 3, target.model_ar);
        const TrainTrace trace = train_steps(params, data, ctx.config.train, &mixup);

        const std::string tag = std::to_string(t);
        save_params(dir / ("model_" + tag + ".bin"), params);
        std::string csv = ctx.csv_comment() + "step,total,id,triplet\n";
        Series total;
        for (std::size_t s = 0; s < trace.total.size(); ++s) {
            csv += std::to_string(s) + "," + num(trace.total[s]) + "," + num(trace.id[s]) + "," + num(trace.triplet[s]) + "\n";
            total.emplace_back(static_cast<double>(s), trace.total[s]);
        }
        write_text(dir / ("loss_" + tag + ".csv"), csv);
        const std::vector<Series> curves{total};
        write_png(dir / ("loss_" + tag + ".png"), line_plot(curves), ctx.png_text());

        FeatureSet set{embed(params, data.images), data.labels, cameras};
        write_store_with_sidecar(dir / ("features_" + tag + ".rfv"), to_feature_store(set, static_cast<float>(params.model_ar)),
                                 ctx, {{"model", "model_" + tag + ".bin"}});

        const std::size_t n = trace.total.size();
        const double first = window_mean(trace.total, 0, 20);
        const double last = window_mean(trace.total, n >= 20 ? n - 20 : 0, n);
        models.push_back({{"target", t},
                          {"input_shape", target.shape()},
                          {"model_ar", target.model_ar},
                          {"patch_spec", params.grid.spec},
                          {"patches", params.grid.n},
                          {"parameters", params.values.size()},
                          {"first20_mean", first},
                          {"last20_mean", last},
                          {"loss_decreased", last < first}});
    }
    const json summary = {{"run", ctx.stamp()}, {"config", ctx.config}, {"models", models}};
    save_json(dir / "train.json", summary);
    out << summary.dump(2) << '\n';
    return 0;
}

int cmd_extract(const Common& common, const std::string& params_path, const std::string& manifest_path,
                const std::string& name, std::ostream& out) {
    const RunContext ctx = make_context(common);
    const ModelParams params = load_params(params_path);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const std::vector<Image> images = load_images(manifest, params.input_shape);
    FeatureSet set{embed(params, images), {}, {}};
    for (const auto& e : manifest.entries) {
        set.vehicle_ids.push_back(e.vehicle_id);
        set.camera_ids.push_back(e.camera_id);
    }
    const fs::path path = prepare_out_dir(common) / (name + ".rfv");
    write_store_with_sidecar(path, to_feature_store(set, static_cast<float>(params.model_ar)), ctx,
                             {{"model", params_path}, {"manifest", manifest_path}});
    out << json({{"run", ctx.stamp()}, {"store", path.string()}, {"count", set.size()}, {"model_ar", params.model_ar}})
               .dump(2)
        << '\n';
    return 0;
}

// ---------------------------------------------------------------- fuse / eval

int cmd_fuse(const Common& common, const std::vector<std::string>& store_paths, const std::string& manifest_path,
             const std::string& policy_path, const std::string& name, std::ostream& out) {
    const RunContext ctx = make_context(common);
    if (store_paths.empty()) throw Error(ErrorKind::empty_input, "fuse needs at least one --stores file");
    const FusionPolicy policy = policy_path.empty() ? ctx.config.policy : load_policy(policy_path);
    const DatasetManifest manifest = load_manifest(manifest_path);
    std::vector<FeatureStore> stores;
    for (const auto& p : store_paths) stores.push_back(read_feature_store(p));
    const std::size_t count = manifest.entries.size();
    for (std::size_t s = 0; s < stores.size(); ++s) {
        if (stores[s].records.size() != count) {
            throw Error(ErrorKind::shape, store_paths[s] + " has " + std::to_string(stores[s].records.size()) +
                                              " records, manifest has " + std::to_string(count));
        }
        if (stores[s].dim != stores[0].dim) throw Error(ErrorKind::shape, "fused stores differ in dimension");
    }

    FeatureStore fused;
    fused.dim = stores[0].dim;
    fused.model_ar = 0.0f;
    std::vector<TaggedFeature> tagged(stores.size());
    for (std::size_t i = 0; i < count; ++i) {
        const auto& e = manifest.entries[i];
        for (std::size_t s = 0; s < stores.size(); ++s) {
            const auto& r = stores[s].records[i];
            if (r.vehicle_id != e.vehicle_id || r.camera_id != e.camera_id) {
                throw Error(ErrorKind::shape, store_paths[s] + " record " + std::to_string(i) + " does not match manifest");
            }
            tagged[s].vector.assign(r.feature.begin(), r.feature.end());
            tagged[s].model_ar = stores[s].model_ar;
        }
        const std::vector<double> f = fuse_features(tagged, e.shape().aspect_ratio(), policy);
        FeatureRecord rec{e.vehicle_id, e.camera_id, {}};
        for (double v : f) rec.feature.push_back(static_cast<float>(v));
        fused.records.push_back(std::move(rec));
    }
    const fs::path path = prepare_out_dir(common) / (name + ".rfv");
    write_store_with_sidecar(path, fused, ctx, {{"sources", store_paths}, {"policy", policy}});
    out << json({{"run", ctx.stamp()}, {"store", path.string()}, {"count", count}}).dump(2) << '\n';
    return 0;
}

int cmd_eval(const Common& common, std::string query_path, std::string gallery_path,
             const std::vector<std::string>& stores, const std::string& protocol_path, std::ostream& out) {
    const RunContext ctx = make_context(common);
    if (query_path.empty() && stores.size() == 2) {
        query_path = stores[0];
        gallery_path = stores[1];
    }
    if (query_path.empty() || gallery_path.empty()) {
        throw Error(ErrorKind::config, "eval needs --query and --gallery (or two --stores)");
    }
    const EvalProtocol protocol = protocol_path.empty() ? ctx.config.protocol : load_protocol(protocol_path);
    const FeatureSet queries = to_feature_set(read_feature_store(query_path));
    const FeatureSet gallery = to_feature_set(read_feature_store(gallery_path));
    const EvalReport report = evaluate(queries, gallery, protocol);

    const fs::path dir = prepare_out_dir(common);
    json j = report;
    j["run"] = ctx.stamp();
    j["protocol"] = protocol;
    j["query"] = query_path;
    j["gallery"] = gallery_path;
    save_json(dir / "report.json", j);
    std::string csv = ctx.csv_comment() + "rank,accuracy\n";
    Series curve;
    for (std::size_t r = 0; r < report.cmc_full.size(); ++r) {
        csv += std::to_string(r + 1) + "," + num(report.cmc_full[r]) + "\n";
        curve.emplace_back(static_cast<double>(r + 1), report.cmc_full[r]);
    }
    write_text(dir / "cmc.csv", csv);
    const std::vector<Series> curves{curve};
    write_png(dir / "cmc.png", line_plot(curves), ctx.png_text());
    json summary = {{"mAP", report.mAP}, {"skipped_queries", report.skipped_queries}};
    for (const auto& [rank, acc] : report.cmc) summary["R" + std::to_string(rank)] = acc;
    out << summary.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- losses-demo

int cmd_losses_demo(const Common& common, std::ostream& out) {
    const RunContext ctx = make_context(common);
    Rng rng(ctx.config.seed);
    constexpr std::size_t P = 3, K = 3, dim = 8, classes = 5;
    std::vector<std::uint64_t> ids;
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < P; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
            ids.push_back(i);
            labels.push_back(i);
        }
    }
    std::vector<double> features(P * K * dim), logits(P * K * classes);
    for (auto& v : features) v = rng.normal();
    for (auto& v : logits) v = rng.normal();

    const LogitBatch logit_batch{Matrix(P * K, classes, logits), labels};
    const EmbeddingBatch embedding = EmbeddingBatch::make(Matrix(P * K, dim, features), ids);
    const double id = id_loss(logit_batch);
    const double tri = triplet_loss(embedding);
    const auto id_check = finite_difference_check(id_loss_objective(labels, classes), logits, 1e-4, 1e-4);
    const auto tri_check = finite_difference_check(triplet_loss_objective(ids, dim), features, 1e-4, 1e-4);
    const json j = {{"run", ctx.stamp()},
                    {"P", P},
                    {"K", K},
                    {"id_loss", id},
                    {"triplet_loss", tri},
                    {"overall_loss", overall_loss(id, tri)},
                    {"id_gradient_check", id_check},
                    {"triplet_gradient_check", tri_check}};
    if (common.out_dir != ".") save_json(prepare_out_dir(common) / "losses.json", j);
    out << j.dump(2) << '\n';
    return id_check.passed && tri_check.passed ? 0 : 1;
}

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("--config", common.config_path, "Run configuration JSON");
    cmd->add_option("--seed", common.seed, "Top-level seed (overrides the config)");
    cmd->add_option("--out-dir", common.out_dir, "Output directory");
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message) {
    err << json({{"error", kind}, {"message", message}}).dump() << '\n';
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::parse: return 2;
        case ErrorKind::io: return 3;
        case ErrorKind::format: return 4;
        case ErrorKind::shape: return 5;
        case ErrorKind::invalid_geometry:
        case ErrorKind::overlapping_grid: return 6;
        case ErrorKind::empty_dataset:
        case ErrorKind::empty_input:
        case ErrorKind::empty_evaluation: return 7;
        case ErrorKind::infeasible_k:
        case ErrorKind::degenerate_batch:
        case ErrorKind::degenerate_dataset: return 8;
    }
    return 1;
}

int run_pipeline(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Aspect-ratio-adaptive re-identification toolkit"};
    app.require_subcommand(1);
    Common common;

    std::size_t ids = 8, instances = 8, queries = 2, gallery_n = 4;
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset (PNG + JSONL manifests)");
    add_common(synth, common);
    synth->add_option("--ids", ids, "Identities");
    synth->add_option("--instances", instances, "Training instances per identity");
    synth->add_option("--queries", queries, "Query instances per identity");
    synth->add_option("--gallery", gallery_n, "Gallery instances per identity");

    std::string manifest;
    std::size_t k = 3, bins = 10, base_height = 224;
    auto* stats = app.add_subcommand("stats", "Aspect-ratio statistics of a manifest");
    add_common(stats, common);
    stats->add_option("--manifest", manifest, "Dataset manifest (JSONL)")->required();
    stats->add_option("--k", k, "Aspect-ratio clusters");
    stats->add_option("--bins", bins, "Histogram bins");

    std::string stats_path;
    auto* plan = app.add_subcommand("plan", "Resize plan from aspect-ratio clusters");
    add_common(plan, common);
    plan->add_option("--stats", stats_path, "stats.json from the stats subcommand");
    plan->add_option("--manifest", manifest, "Manifest (when no --stats)");
    plan->add_option("--k", k, "Aspect-ratio clusters (with --manifest)");
    plan->add_option("--base-height", base_height, "Target height in pixels");

    auto* augment = app.add_subcommand("augment", "Apply patch mixup to a manifest's images");
    add_common(augment, common);
    augment->add_option("--manifest", manifest, "Dataset manifest (JSONL)")->required();

    std::string plan_path;
    std::optional<std::size_t> target;
    auto* train = app.add_subcommand("train-toy", "Train one toy encoder per resize target");
    add_common(train, common);
    train->add_option("--manifest", manifest, "Training manifest (synthetic data when omitted)");
    train->add_option("--plan", plan_path, "plan.json (overrides the config's resize plan)");
    train->add_option("--target", target, "Train only this target index");

    std::string params_path, name = "features";
    auto* extract = app.add_subcommand("extract", "Extract features with a trained model");
    add_common(extract, common);
    extract->add_option("--params", params_path, "Model file from train-toy")->required();
    extract->add_option("--manifest", manifest, "Dataset manifest (JSONL)")->required();
    extract->add_option("--name", name, "Output store name (without .rfv)");

    std::vector<std::string> stores;
    std::string policy_path, fused_name = "fused";
    auto* fuse = app.add_subcommand("fuse", "Aspect-ratio weighted fusion of feature stores");
    add_common(fuse, common);
    fuse->add_option("--stores", stores, "Feature stores to fuse (repeatable)")->required();
    fuse->add_option("--manifest", manifest, "Manifest supplying per-image aspect ratios")->required();
    fuse->add_option("--policy", policy_path, "Fusion policy JSON");
    fuse->add_option("--name", fused_name, "Output store name (without .rfv)");

    std::string query_path, gallery_path, protocol_path;
    auto* eval = app.add_subcommand("eval", "mAP / CMC of a query store against a gallery store");
    add_common(eval, common);
    eval->add_option("--query", query_path, "Query feature store");
    eval->add_option("--gallery", gallery_path, "Gallery feature store");
    eval->add_option("--stores", stores, "Query then gallery store");
    eval->add_option("--protocol", protocol_path, "Evaluation protocol JSON");

    auto* demo = app.add_subcommand("losses-demo", "Loss values and gradient checks on a seeded batch");
    add_common(demo, common);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        report_error(err, "usage", e.what());
        return 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(common, ids, instances, queries, gallery_n, out);
        if (stats->parsed()) return cmd_stats(common, manifest, k, bins, out);
        if (plan->parsed()) return cmd_plan(common, stats_path, manifest, k, base_height, out);
        if (augment->parsed()) return cmd_augment(common, manifest, out);
        if (train->parsed()) return cmd_train(common, manifest, plan_path, target, out);
        if (extract->parsed()) return cmd_extract(common, params_path, manifest, name, out);
        if (fuse->parsed()) return cmd_fuse(common, stores, manifest, policy_path, fused_name, out);
        if (eval->parsed()) return cmd_eval(common, query_path, gallery_path, stores, protocol_path, out);
        if (demo->parsed()) return cmd_losses_demo(common, out);
    } catch (const Error& e) {
        report_error(err, to_string(e.kind()), e.what());
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        report_error(err, "internal", e.what());
        return 1;
    }
    return 2;
}

}  // namespace arreid
