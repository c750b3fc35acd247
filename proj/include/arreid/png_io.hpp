#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "arreid/image.hpp"

namespace arreid {

// Decodes to RGB in [0, 1]; grayscale is replicated to three channels and
// alpha is dropped.
Image read_png(const std::filesystem::path& path);

// 8-bit RGB (or gray for one channel). `text` becomes tEXt chunks; no time
// chunk is written, so identical inputs give identical files.
void write_png(const std::filesystem::path& path, const Image& image,
               const std::map<std::string, std::string>& text = {});

}  // namespace arreid
