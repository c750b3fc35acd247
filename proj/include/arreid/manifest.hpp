#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "arreid/patch_geometry.hpp"

namespace arreid {

struct ManifestEntry {
    std::string path;
    std::uint64_t vehicle_id = 0;
    std::uint32_t camera_id = 0;
    std::size_t width = 0;
    std::size_t height = 0;

    ImageShape shape() const { return {height, width}; }
    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// JSON Lines, one object per line:
//   {"path": "...", "vehicle_id": 3, "camera_id": 1, "width": 120, "height": 90}
// Relative paths resolve against the manifest's directory.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;
    std::filesystem::path base_dir;

    std::filesystem::path resolve(const ManifestEntry& entry) const;
    std::vector<ImageShape> shapes() const;
};

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace arreid
