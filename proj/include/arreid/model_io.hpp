#pragma once

// Toy model parameter files:
//   "RTV1" | u32 version | u64 header_bytes | header JSON | u64 count | count × f64
// The header carries config, input shape, channels, model_ar and class labels;
// the layout is rebuilt from it on load.

#include <filesystem>

#include "arreid/toy_vit.hpp"

namespace arreid {

void save_params(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace arreid
