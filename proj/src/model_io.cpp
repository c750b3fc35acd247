#include "arreid/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "arreid/error.hpp"
#include "arreid/run_config.hpp"

namespace arreid {

using nlohmann::json;

namespace {

constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in, const std::filesystem::path& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
        throw Error(ErrorKind::format, "model file truncated: " + path.string());
    }
    return v;
}

}  // namespace

void save_params(const std::filesystem::path& path, const ModelParams& params) {
    static_assert(std::endian::native == std::endian::little, "model files are written little-endian");
    const json header = {{"config", params.config},
                         {"input_shape", params.input_shape},
                         {"channels", params.channels},
                         {"model_ar", params.model_ar},
                         {"class_labels", params.class_labels}};
    const std::string text = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write model " + path.string());
    out.write("RTV1", 4);
    put<std::uint32_t>(out, kModelVersion);
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    put<std::uint64_t>(out, params.values.size());
    out.write(reinterpret_cast<const char*>(params.values.data()),
              static_cast<std::streamsize>(params.values.size() * sizeof(double)));
    if (!out) throw Error(ErrorKind::io, "failed writing model " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open model " + path.string());
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "RTV1", 4) != 0) {
        throw Error(ErrorKind::format, path.string() + " is not a model file");
    }
    if (take<std::uint32_t>(in, path) != kModelVersion) throw Error(ErrorKind::format, "unsupported model version");
    const auto header_bytes = take<std::uint64_t>(in, path);
    if (header_bytes > (1u << 24)) throw Error(ErrorKind::format, "model header too large");
    std::string text(header_bytes, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(header_bytes))) {
        throw Error(ErrorKind::format, "model file truncated: " + path.string());
    }
    json header;
    try {
        header = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, std::string("model header: ") + e.what());
    }
    ModelParams p = init_params(header.at("config").get<ToyViTConfig>(), header.at("input_shape").get<ImageShape>(),
                                header.at("class_labels").get<std::vector<std::uint64_t>>(),
                                header.at("channels").get<std::size_t>(), header.at("model_ar").get<double>());
    const auto count = take<std::uint64_t>(in, path);
    if (count != p.values.size()) {
        throw Error(ErrorKind::format, "model holds " + std::to_string(count) + " values, layout expects " +
                                           std::to_string(p.values.size()));
    }
    if (!in.read(reinterpret_cast<char*>(p.values.data()), static_cast<std::streamsize>(count * sizeof(double)))) {
        throw Error(ErrorKind::format, "model file truncated: " + path.string());
    }
    return p;
}

}  // namespace arreid
