#include "arreid/feature_store.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "arreid/error.hpp"

namespace arreid {

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    out.insert(out.end(), std::begin(bytes), std::end(bytes));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& offset) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes.data() + offset, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(raw), std::end(raw));
    offset += sizeof(T);
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
}

}  // namespace

std::vector<std::uint8_t> serialize_feature_store(const FeatureStore& store) {
    if (store.dim == 0) throw Error(ErrorKind::format, "feature store dimension must be positive");
    std::vector<std::uint8_t> out;
    out.reserve(store.byte_size());
    out.insert(out.end(), {'R', 'F', 'V', '1'});
    put<std::uint32_t>(out, kFeatureStoreVersion);
    put<std::uint32_t>(out, store.dim);
    put<std::uint64_t>(out, store.records.size());
    put<float>(out, store.model_ar);
    for (const auto& r : store.records) {
        if (r.feature.size() != store.dim) throw Error(ErrorKind::shape, "record dimension differs from store dimension");
        put<std::uint64_t>(out, r.vehicle_id);
        put<std::uint32_t>(out, r.camera_id);
        for (float v : r.feature) put<float>(out, v);
    }
    return out;
}

FeatureStore deserialize_feature_store(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kFeatureStoreHeaderBytes) {
        throw Error(ErrorKind::format, "feature store truncated: " + std::to_string(bytes.size()) + " bytes");
    }
    if (std::memcmp(bytes.data(), "RFV1", 4) != 0) throw Error(ErrorKind::format, "feature store magic mismatch");
    std::size_t offset = 4;
    const auto version = get<std::uint32_t>(bytes, offset);
    if (version != kFeatureStoreVersion) {
        throw Error(ErrorKind::format, "unsupported feature store version " + std::to_string(version));
    }
    FeatureStore store;
    store.dim = get<std::uint32_t>(bytes, offset);
    const auto count = get<std::uint64_t>(bytes, offset);
    store.model_ar = get<float>(bytes, offset);
    if (store.dim == 0) throw Error(ErrorKind::format, "feature store dimension is zero");
    const std::uint64_t record_bytes = 12 + 4 * std::uint64_t{store.dim};
    if (count > (bytes.size() - kFeatureStoreHeaderBytes) / record_bytes ||
        bytes.size() != kFeatureStoreHeaderBytes + count * record_bytes) {
        throw Error(ErrorKind::format, "feature store size " + std::to_string(bytes.size()) +
                                           " does not match header (count " + std::to_string(count) + ", dim " +
                                           std::to_string(store.dim) + ")");
    }
    store.records.resize(count);
    for (auto& r : store.records) {
        r.vehicle_id = get<std::uint64_t>(bytes, offset);
        r.camera_id = get<std::uint32_t>(bytes, offset);
        r.feature.resize(store.dim);
        for (auto& v : r.feature) v = get<float>(bytes, offset);
    }
    return store;
}

void write_feature_store(const std::filesystem::path& path, const FeatureStore& store) {
    const auto bytes = serialize_feature_store(store);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write feature store " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "failed writing feature store " + path.string());
}

FeatureStore read_feature_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open feature store " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_feature_store(bytes);
}

FeatureSet to_feature_set(const FeatureStore& store) {
    FeatureSet set;
    set.features = Matrix(store.records.size(), store.dim);
    for (std::size_t i = 0; i < store.records.size(); ++i) {
        const auto& r = store.records[i];
        for (std::size_t k = 0; k < store.dim; ++k) set.features(i, k) = r.feature[k];
        set.vehicle_ids.push_back(r.vehicle_id);
        set.camera_ids.push_back(r.camera_id);
    }
    return set;
}

FeatureStore to_feature_store(const FeatureSet& set, float model_ar) {
    set.validate();
    FeatureStore store;
    store.dim = static_cast<std::uint32_t>(set.dim());
    store.model_ar = model_ar;
    for (std::size_t i = 0; i < set.size(); ++i) {
        FeatureRecord r{set.vehicle_ids[i], set.camera_ids[i], {}};
        for (double v : set.features.row(i)) r.feature.push_back(static_cast<float>(v));
        store.records.push_back(std::move(r));
    }
    return store;
}

}  // namespace arreid
