#pragma once

#include <filesystem>
#include <vector>

#include "mpm/data/record.hpp"

namespace mpm::data {

inline constexpr const char* kDataFormat = "mpm-data/1";

/// Writes records as an mpm-data/1 archive directory: manifest.json
/// (canonical JSON with format, joint order and a record index of
/// shapes/files/offsets) plus one flat little-endian binary32 file per record
/// per modality, frame-major then joint-major then coordinate.
void write_dataset(const std::filesystem::path& dir, const std::vector<SequenceRecord>& records);

/// Reads an mpm-data/1 archive. Throws DataFormatError with kCorruptHeader
/// (unreadable manifest), kVersionMismatch, kCorruptContainer (truncated
/// payload) or kShapeMismatch (payload or shapes disagree with the manifest).
std::vector<SequenceRecord> read_dataset(const std::filesystem::path& dir);

}  // namespace mpm::data
