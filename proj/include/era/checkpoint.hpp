#pragma once

#include <cstdint>
#include <string>

#include "era/model.hpp"

namespace era {

// Checkpoint = JSON manifest (parameter names, shapes, quadrant ordering,
// config hash) + raw little-endian float64 blob in manifest order.
void save_checkpoint(const ModelParams& params, std::uint64_t config_hash,
                     const std::string& manifest_path, const std::string& blob_path);

ModelParams load_checkpoint(const std::string& manifest_path,
                            std::uint64_t* config_hash_out = nullptr);

}  // namespace era
