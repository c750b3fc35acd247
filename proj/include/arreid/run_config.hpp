#pragma once

// JSON forms of every configuration and result type, plus the run
// configuration that ties a pipeline invocation together.

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "arreid/fusion.hpp"
#include "arreid/patch_geometry.hpp"
#include "arreid/patch_mixup.hpp"
#include "arreid/reid_eval.hpp"
#include "arreid/toy_vit.hpp"

namespace arreid {

struct RunConfig {
    std::uint64_t seed = 0;
    MixupConfig mixup;
    FusionPolicy policy;
    EvalProtocol protocol;
    ToyViTConfig toy_vit;
    TrainConfig train;
    ResizePlan resize;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const ImageShape& v);
void from_json(const nlohmann::json& j, ImageShape& v);
void to_json(nlohmann::json& j, const PatchSpec& v);
void from_json(const nlohmann::json& j, PatchSpec& v);
void to_json(nlohmann::json& j, const MixupConfig& v);
void from_json(const nlohmann::json& j, MixupConfig& v);
void to_json(nlohmann::json& j, const MixupPlan& v);
void from_json(const nlohmann::json& j, MixupPlan& v);
void to_json(nlohmann::json& j, const FusionPolicy& v);
void from_json(const nlohmann::json& j, FusionPolicy& v);
void to_json(nlohmann::json& j, const EvalProtocol& v);
void from_json(const nlohmann::json& j, EvalProtocol& v);
void to_json(nlohmann::json& j, const ToyViTConfig& v);
void from_json(const nlohmann::json& j, ToyViTConfig& v);
void to_json(nlohmann::json& j, const TrainConfig& v);
void from_json(const nlohmann::json& j, TrainConfig& v);
void to_json(nlohmann::json& j, const ResizePlan& v);
void from_json(const nlohmann::json& j, ResizePlan& v);
void to_json(nlohmann::json& j, const AspectRatioStats& v);
void from_json(const nlohmann::json& j, AspectRatioStats& v);
void to_json(nlohmann::json& j, const EvalReport& v);
void to_json(nlohmann::json& j, const GradientCheckReport& v);
void to_json(nlohmann::json& j, const RunConfig& v);
void from_json(const nlohmann::json& j, RunConfig& v);

// FNV-1a over the canonical (key-sorted, compact) JSON dump, as 16 hex digits.
std::string config_hash(const RunConfig& config);

nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& value);

// Missing keys keep their defaults; wrong types raise Error(config).
RunConfig load_run_config(const std::filesystem::path& path);
FusionPolicy load_policy(const std::filesystem::path& path);
EvalProtocol load_protocol(const std::filesystem::path& path);

}  // namespace arreid
