#include "arreid/manifest.hpp"

#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "arreid/error.hpp"

namespace arreid {

using nlohmann::json;

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw Error(ErrorKind::parse, "manifest line " + std::to_string(line) + ": " + what);
}

template <typename T>
T required_unsigned(const json& obj, const char* key, std::size_t line) {
    if (!obj.contains(key)) fail_line(line, std::string("missing ") + key);
    const auto& v = obj.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        fail_line(line, std::string(key) + " must be a non-negative integer");
    }
    const auto raw = v.get<std::uint64_t>();
    if (raw > std::numeric_limits<T>::max()) fail_line(line, std::string(key) + " out of range");
    return static_cast<T>(raw);
}

}  // namespace

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& entry) const {
    const std::filesystem::path p(entry.path);
    return p.is_absolute() ? p : base_dir / p;
}

std::vector<ImageShape> DatasetManifest::shapes() const {
    std::vector<ImageShape> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.shape());
    return out;
}

DatasetManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
    DatasetManifest manifest;
    manifest.base_dir = base_dir;
    std::set<std::string> seen;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            fail_line(line, std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object()) fail_line(line, "expected a JSON object");
        ManifestEntry entry;
        if (!obj.contains("path") || !obj.at("path").is_string()) fail_line(line, "missing path");
        entry.path = obj.at("path").get<std::string>();
        entry.vehicle_id = required_unsigned<std::uint64_t>(obj, "vehicle_id", line);
        entry.camera_id = required_unsigned<std::uint32_t>(obj, "camera_id", line);
        entry.width = required_unsigned<std::size_t>(obj, "width", line);
        entry.height = required_unsigned<std::size_t>(obj, "height", line);
        if (entry.width == 0 || entry.height == 0) fail_line(line, "width and height must be positive");
        if (!seen.insert(entry.path).second) fail_line(line, "duplicate path " + entry.path);
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open manifest " + path.string());
    return parse_manifest(in, path.parent_path());
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write manifest " + path.string());
    for (const auto& e : manifest.entries) {
        json obj = {{"path", e.path},
                    {"vehicle_id", e.vehicle_id},
                    {"camera_id", e.camera_id},
                    {"width", e.width},
                    {"height", e.height}};
        out << obj.dump() << '\n';
    }
}

}  // namespace arreid
