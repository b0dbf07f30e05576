#pragma once

#include <filesystem>

#include <json.hpp>

#include "mpm/net/model_state.hpp"

namespace mpm::net {

inline constexpr const char* kCheckpointFormat = "mpm-ckpt/1";

/// Writes a checkpoint: an 8-byte little-endian header length, a canonical
/// JSON header (format, stage, config, tensor manifest of name/shape/offset,
/// optional metadata), then every tensor as little-endian binary32 in
/// manifest order. Offsets are relative to the first tensor byte.
void save_checkpoint(const std::filesystem::path& path, const ModelState<float>& state,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Reads a checkpoint written by save_checkpoint. Throws DataFormatError with
/// kCorruptHeader, kCorruptContainer, kShapeMismatch or kVersionMismatch.
ModelState<float> load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata = nullptr);

}  // namespace mpm::net
