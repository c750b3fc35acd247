#include "arreid/run_config.hpp"

#include <cstdio>
#include <fstream>

#include "arreid/error.hpp"

namespace arreid {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& field) {
    if (j.contains(key)) j.at(key).get_to(field);
}

void expect_object(const json& j, const char* what) {
    if (!j.is_object()) throw Error(ErrorKind::config, std::string(what) + " must be a JSON object");
}

const char* distance_name(Distance d) { return d == Distance::cosine ? "cosine" : "squared_euclidean"; }

}  // namespace

void to_json(json& j, const ImageShape& v) { j = {{"height", v.height}, {"width", v.width}}; }
void from_json(const json& j, ImageShape& v) {
    expect_object(j, "image shape");
    read(j, "height", v.height);
    read(j, "width", v.width);
}

void to_json(json& j, const PatchSpec& v) {
    j = {{"patch_h", v.patch_h}, {"patch_w", v.patch_w}, {"stride_h", v.stride_h}, {"stride_w", v.stride_w}};
}
void from_json(const json& j, PatchSpec& v) {
    expect_object(j, "patch_spec");
    read(j, "patch_h", v.patch_h);
    read(j, "patch_w", v.patch_w);
    read(j, "stride_h", v.stride_h);
    read(j, "stride_w", v.stride_w);
}

void to_json(json& j, const MixupConfig& v) {
    j = {{"ar_range", {v.ar_low, v.ar_high}},
         {"image_fraction", v.image_fraction},
         {"patch_fraction", v.patch_fraction},
         {"distance_scale", v.distance_scale},
         {"patch_size", v.patch_size},
         {"seed", v.seed}};
}
void from_json(const json& j, MixupConfig& v) {
    expect_object(j, "mixup");
    if (j.contains("ar_range")) {
        const auto& r = j.at("ar_range");
        if (!r.is_array() || r.size() != 2) throw Error(ErrorKind::config, "mixup ar_range must be [low, high]");
        r.at(0).get_to(v.ar_low);
        r.at(1).get_to(v.ar_high);
    }
    read(j, "image_fraction", v.image_fraction);
    read(j, "patch_fraction", v.patch_fraction);
    read(j, "distance_scale", v.distance_scale);
    read(j, "patch_size", v.patch_size);
    read(j, "seed", v.seed);
}

void to_json(json& j, const MixupPlan& v) {
    j = {{"selected", v.selected}, {"partners", v.partners}, {"weights", v.weights}};
}
void from_json(const json& j, MixupPlan& v) {
    expect_object(j, "mixup plan");
    read(j, "selected", v.selected);
    read(j, "partners", v.partners);
    read(j, "weights", v.weights);
}

void to_json(json& j, const FusionPolicy& v) {
    json thresholds = json::array();
    for (const auto& t : v.thresholds) thresholds.push_back({{"upper_bound", t.upper_bound}, {"weight", t.weight}});
    j = {{"thresholds", thresholds}, {"default_weight", v.default_weight}};
}
void from_json(const json& j, FusionPolicy& v) {
    expect_object(j, "policy");
    if (j.contains("thresholds")) {
        v.thresholds.clear();
        for (const auto& t : j.at("thresholds")) {
            WeightThreshold w;
            if (t.is_array() && t.size() == 2) {
                t.at(0).get_to(w.upper_bound);
                t.at(1).get_to(w.weight);
            } else {
                expect_object(t, "policy threshold");
                t.at("upper_bound").get_to(w.upper_bound);
                t.at("weight").get_to(w.weight);
            }
            v.thresholds.push_back(w);
        }
    }
    read(j, "default_weight", v.default_weight);
}

void to_json(json& j, const EvalProtocol& v) {
    j = {{"distance", distance_name(v.distance)},
         {"exclude_same_camera", v.exclude_same_camera},
         {"cmc_ranks", v.cmc_ranks},
         {"l2_normalize", v.l2_normalize}};
}
void from_json(const json& j, EvalProtocol& v) {
    expect_object(j, "protocol");
    if (j.contains("distance")) {
        const auto name = j.at("distance").get<std::string>();
        if (name == "cosine") {
            v.distance = Distance::cosine;
        } else if (name == "squared_euclidean") {
            v.distance = Distance::squared_euclidean;
        } else {
            throw Error(ErrorKind::config, "unknown distance " + name);
        }
    }
    read(j, "exclude_same_camera", v.exclude_same_camera);
    read(j, "cmc_ranks", v.cmc_ranks);
    read(j, "l2_normalize", v.l2_normalize);
}

void to_json(json& j, const ToyViTConfig& v) {
    j = {{"patch_spec", v.patch_spec}, {"short_side_stride", v.short_side_stride},
         {"embed_dim", v.embed_dim},   {"layers", v.layers},
         {"heads", v.heads},           {"mlp_ratio", v.mlp_ratio},
         {"seed", v.seed}};
}
void from_json(const json& j, ToyViTConfig& v) {
    expect_object(j, "toy_vit");
    read(j, "patch_spec", v.patch_spec);
    read(j, "short_side_stride", v.short_side_stride);
    read(j, "embed_dim", v.embed_dim);
    read(j, "layers", v.layers);
    read(j, "heads", v.heads);
    read(j, "mlp_ratio", v.mlp_ratio);
    read(j, "seed", v.seed);
}

void to_json(json& j, const TrainConfig& v) {
    j = {{"steps", v.steps}, {"lr", v.lr}, {"momentum", v.momentum}, {"weight_decay", v.weight_decay},
         {"grad_clip", v.grad_clip}, {"P", v.P}, {"K", v.K}, {"use_mixup", v.use_mixup}};
}
void from_json(const json& j, TrainConfig& v) {
    expect_object(j, "train");
    read(j, "steps", v.steps);
    read(j, "lr", v.lr);
    read(j, "momentum", v.momentum);
    read(j, "weight_decay", v.weight_decay);
    read(j, "grad_clip", v.grad_clip);
    read(j, "P", v.P);
    read(j, "K", v.K);
    read(j, "use_mixup", v.use_mixup);
}

void to_json(json& j, const ResizePlan& v) {
    json targets = json::array();
    for (const auto& t : v.targets) {
        targets.push_back({{"target_h", t.target_h}, {"target_w", t.target_w}, {"model_ar", t.model_ar}});
    }
    j = {{"targets", targets}};
}
void from_json(const json& j, ResizePlan& v) {
    expect_object(j, "resize plan");
    v.targets.clear();
    if (!j.contains("targets")) return;
    for (const auto& t : j.at("targets")) {
        ResizeTarget r;
        t.at("target_h").get_to(r.target_h);
        t.at("target_w").get_to(r.target_w);
        t.at("model_ar").get_to(r.model_ar);
        v.targets.push_back(r);
    }
}

void to_json(json& j, const AspectRatioStats& v) {
    json hist = json::array();
    for (const auto& b : v.histogram) hist.push_back({{"bin_lower", b.lower}, {"bin_upper", b.upper}, {"count", b.count}});
    j = {{"count", v.count},
         {"mean_ar", v.mean_ar},
         {"median_ar", v.median_ar},
         {"mean_size", {{"height", v.mean_size.height}, {"width", v.mean_size.width}}},
         {"median_size", {{"height", v.median_size.height}, {"width", v.median_size.width}}},
         {"histogram", hist},
         {"cluster_centers", v.cluster_centers}};
}
void from_json(const json& j, AspectRatioStats& v) {
    expect_object(j, "stats");
    read(j, "count", v.count);
    read(j, "mean_ar", v.mean_ar);
    read(j, "median_ar", v.median_ar);
    if (j.contains("mean_size")) {
        j.at("mean_size").at("height").get_to(v.mean_size.height);
        j.at("mean_size").at("width").get_to(v.mean_size.width);
    }
    if (j.contains("median_size")) {
        j.at("median_size").at("height").get_to(v.median_size.height);
        j.at("median_size").at("width").get_to(v.median_size.width);
    }
    v.histogram.clear();
    if (j.contains("histogram")) {
        for (const auto& b : j.at("histogram")) {
            v.histogram.push_back({b.at("bin_lower").get<double>(), b.at("bin_upper").get<double>(),
                                   b.at("count").get<std::size_t>()});
        }
    }
    read(j, "cluster_centers", v.cluster_centers);
}

void to_json(json& j, const EvalReport& v) {
    json cmc = json::array();
    for (const auto& [rank, acc] : v.cmc) cmc.push_back({{"rank", rank}, {"accuracy", acc}});
    json ap = json::array();
    for (const auto& a : v.per_query_ap) ap.push_back(a ? json(*a) : json(nullptr));
    j = {{"mAP", v.mAP}, {"cmc", cmc}, {"per_query_ap", ap}, {"skipped_queries", v.skipped_queries},
         {"cmc_full", v.cmc_full}};
}

void to_json(json& j, const GradientCheckReport& v) {
    j = {{"max_relative_error", v.max_relative_error},
         {"passed", v.passed},
         {"checked", v.checked},
         {"skipped", v.skipped},
         {"warnings", v.warnings}};
}

void to_json(json& j, const RunConfig& v) {
    j = {{"seed", v.seed},         {"mixup", v.mixup},     {"policy", v.policy}, {"protocol", v.protocol},
         {"toy_vit", v.toy_vit},   {"train", v.train},     {"resize", v.resize}};
}
void from_json(const json& j, RunConfig& v) {
    expect_object(j, "run config");
    read(j, "seed", v.seed);
    read(j, "mixup", v.mixup);
    read(j, "policy", v.policy);
    read(j, "protocol", v.protocol);
    read(j, "toy_vit", v.toy_vit);
    read(j, "train", v.train);
    read(j, "resize", v.resize);
}

std::string config_hash(const RunConfig& config) {
    const std::string text = json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
}

void save_json(const std::filesystem::path& path, const json& value) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
    out << value.dump(2) << '\n';
}

namespace {

template <typename T>
T load_as(const std::filesystem::path& path) {
    const json j = load_json(path);
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::config, path.string() + ": " + e.what());
    }
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig config = load_as<RunConfig>(path);
    config.mixup.validate();
    config.policy.validate();
    config.protocol.validate();
    config.toy_vit.validate();
    config.train.validate();
    return config;
}

FusionPolicy load_policy(const std::filesystem::path& path) {
    FusionPolicy policy = load_as<FusionPolicy>(path);
    policy.validate();
    return policy;
}

EvalProtocol load_protocol(const std::filesystem::path& path) {
    EvalProtocol protocol = load_as<EvalProtocol>(path);
    protocol.validate();
    return protocol;
}

}  // namespace arreid
