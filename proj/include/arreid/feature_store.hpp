#pragma once

// Binary feature store, little-endian:
//   "RFV1" | u32 version (1) | u32 dim | u64 count | f32 model_ar
//   count × ( u64 vehicle_id | u32 camera_id | dim × f32 )
// File size is exactly 24 + count × (12 + 4·dim) bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "arreid/reid_eval.hpp"

namespace arreid {

inline constexpr std::uint32_t kFeatureStoreVersion = 1;
inline constexpr std::size_t kFeatureStoreHeaderBytes = 24;

struct FeatureRecord {
    std::uint64_t vehicle_id = 0;
    std::uint32_t camera_id = 0;
    std::vector<float> feature;

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct FeatureStore {
    std::uint32_t dim = 0;
    float model_ar = 0.0f;  // 0 marks a fused store
    std::vector<FeatureRecord> records;

    std::size_t byte_size() const { return kFeatureStoreHeaderBytes + records.size() * (12 + 4 * std::size_t{dim}); }
    friend bool operator==(const FeatureStore&, const FeatureStore&) = default;
};

std::vector<std::uint8_t> serialize_feature_store(const FeatureStore& store);
FeatureStore deserialize_feature_store(std::span<const std::uint8_t> bytes);

void write_feature_store(const std::filesystem::path& path, const FeatureStore& store);
FeatureStore read_feature_store(const std::filesystem::path& path);

FeatureSet to_feature_set(const FeatureStore& store);
FeatureStore to_feature_store(const FeatureSet& set, float model_ar);

}  // namespace arreid
