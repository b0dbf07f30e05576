#include "mpm/data/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "mpm/errors.hpp"

namespace mpm::data {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string array_file(size_t index, const std::string& modality) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "rec_%06zu_%s.bin", index, modality.c_str());
  return buf;
}

void write_array(const fs::path& path, const pose::PoseSequence& seq) {
  std::string bytes;
  bytes.reserve(seq.data().size() * 4);
  for (double v : seq.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataFormatError(DataErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataFormatError(DataErrorCode::kIo, "failed writing " + path.string());
}

json array_entry(const std::string& file, const pose::PoseSequence& seq) {
  return json{{"file", file},
              {"offset", 0},
              {"shape", {seq.frames(), seq.joints(), seq.dim()}},
              {"bytes", seq.data().size() * 4}};
}

pose::PoseSequence read_array(const fs::path& dir, const json& entry, double fps) {
  const std::string file = entry.at("file").get<std::string>();
  const auto shape = entry.at("shape").get<std::vector<int>>();
  const size_t offset = entry.value("offset", size_t{0});
  if (shape.size() != 3 || shape[0] < 0 || shape[1] < 1 || (shape[2] != 2 && shape[2] != 3)) {
    throw DataFormatError(DataErrorCode::kShapeMismatch, "invalid array shape for " + file);
  }
  const size_t expected = static_cast<size_t>(shape[0]) * shape[1] * shape[2] * 4;
  if (entry.contains("bytes") && entry["bytes"].get<size_t>() != expected) {
    throw DataFormatError(DataErrorCode::kShapeMismatch, "manifest byte count disagrees with shape for " + file);
  }
  std::ifstream in(dir / file, std::ios::binary);
  if (!in) throw DataFormatError(DataErrorCode::kCorruptContainer, "missing payload file " + file);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < offset + expected) {
    throw DataFormatError(DataErrorCode::kCorruptContainer, "payload " + file + " is truncated");
  }
  if (bytes.size() > offset + expected) {
    throw DataFormatError(DataErrorCode::kShapeMismatch, "payload " + file + " is larger than its manifest shape");
  }
  pose::PoseSequence seq(shape[0], shape[1], shape[2], fps);
  auto data = seq.data();
  for (size_t i = 0; i < data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + 4 * i + b])) << (8 * b);
    }
    data[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return seq;
}

}  // namespace

void write_dataset(const fs::path& dir, const std::vector<SequenceRecord>& records) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataFormatError(DataErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  json index = json::array();
  for (size_t i = 0; i < records.size(); ++i) {
    const SequenceRecord& r = records[i];
    r.validate();
    json arrays = json::object();
    auto put = [&](const char* modality, const std::optional<pose::PoseSequence>& seq) {
      if (!seq) return;
      const std::string file = array_file(i, modality);
      write_array(dir / file, *seq);
      arrays[modality] = array_entry(file, *seq);
    };
    put("2d", r.pose2d);
    put("3d", r.pose3d);
    put("root", r.root_camera);
    index.push_back({{"id", r.id},
                     {"subject", r.subject},
                     {"action", r.action},
                     {"fps", r.fps},
                     {"frames", r.frames()},
                     {"camera",
                      {{"tag", r.camera.tag},
                       {"focal_px", r.camera.focal_px},
                       {"cx", r.camera.cx},
                       {"cy", r.camera.cy},
                       {"width", r.camera.width},
                       {"height", r.camera.height}}},
                     {"arrays", arrays}});
  }

  json manifest{{"format", kDataFormat},
                {"joint_order", pose::Skeleton::standard().joint_names()},
                {"layout", "frame-major, joint-major, coordinate; IEEE-754 binary32 little-endian"},
                {"records", index}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw DataFormatError(DataErrorCode::kIo, "cannot write manifest in " + dir.string());
  out << manifest.dump(1) << '\n';
}

std::vector<SequenceRecord> read_dataset(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw DataFormatError(DataErrorCode::kIo, "no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, std::string("manifest: ") + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("format") || !manifest["format"].is_string()) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, "manifest lacks a format field");
  }
  if (manifest["format"] != kDataFormat) {
    throw DataFormatError(DataErrorCode::kVersionMismatch,
                          "expected " + std::string(kDataFormat) + ", found " + manifest["format"].dump());
  }

  std::vector<SequenceRecord> records;
  try {
    const auto joints = manifest.at("joint_order").get<std::vector<std::string>>();
    if (joints != pose::Skeleton::standard().joint_names()) {
      throw DataFormatError(DataErrorCode::kShapeMismatch, "joint order differs from the standard skeleton");
    }
    for (const auto& entry : manifest.at("records")) {
      SequenceRecord r;
      r.id = entry.at("id").get<std::string>();
      r.subject = entry.at("subject").get<int>();
      r.action = entry.value("action", std::string());
      r.fps = entry.at("fps").get<double>();
      const auto& cam = entry.at("camera");
      r.camera.tag = cam.value("tag", std::string());
      r.camera.focal_px = cam.at("focal_px").get<double>();
      r.camera.cx = cam.at("cx").get<double>();
      r.camera.cy = cam.at("cy").get<double>();
      r.camera.width = cam.at("width").get<double>();
      r.camera.height = cam.at("height").get<double>();
      const auto& arrays = entry.at("arrays");
      if (arrays.contains("2d")) r.pose2d = read_array(dir, arrays["2d"], r.fps);
      if (arrays.contains("3d")) r.pose3d = read_array(dir, arrays["3d"], r.fps);
      if (arrays.contains("root")) r.root_camera = read_array(dir, arrays["root"], r.fps);
      const int frames = entry.at("frames").get<int>();
      if (r.frames() != frames) {
        throw DataFormatError(DataErrorCode::kShapeMismatch, "record '" + r.id + "' frame count disagrees with manifest");
      }
      try {
        r.validate();
      } catch (const ValidationError& e) {
        throw DataFormatError(DataErrorCode::kShapeMismatch, e.what());
      }
      records.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, std::string("manifest: ") + e.what());
  }
  return records;
}

}  // namespace mpm::data
