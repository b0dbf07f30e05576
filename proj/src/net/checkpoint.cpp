#include "mpm/net/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "mpm/errors.hpp"

namespace mpm::net {

namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelState<float>& state,
                     const nlohmann::json& metadata) {
  nlohmann::json header;
  header["format"] = kCheckpointFormat;
  header["stage"] = static_cast<int>(state.stage);
  header["config"] = state.config;
  header["metadata"] = metadata;

  std::vector<char> blob;
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& p : state.params.all()) {
    manifest.push_back({{"name", p.name}, {"shape", {p.value.rows(), p.value.cols()}}, {"offset", blob.size()}});
    for (Eigen::Index i = 0; i < p.value.size(); ++i) put_u32(blob, std::bit_cast<std::uint32_t>(p.value.data()[i]));
  }
  header["tensors"] = manifest;
  header["data_bytes"] = blob.size();

  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataFormatError(DataErrorCode::kIo, "cannot open " + path.string() + " for writing");
  std::vector<char> prefix;
  const std::uint64_t len = text.size();
  put_u32(prefix, static_cast<std::uint32_t>(len & 0xFFFFFFFFu));
  put_u32(prefix, static_cast<std::uint32_t>(len >> 32));
  out.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataFormatError(DataErrorCode::kIo, "failed writing " + path.string());
}

ModelState<float> load_checkpoint(const std::filesystem::path& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError(DataErrorCode::kIo, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw DataFormatError(DataErrorCode::kCorruptContainer, "checkpoint truncated");
  const std::uint64_t len = get_u32(bytes.data()) | (static_cast<std::uint64_t>(get_u32(bytes.data() + 4)) << 32);
  if (len > bytes.size() - 8) throw DataFormatError(DataErrorCode::kCorruptContainer, "checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(len));
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, std::string("checkpoint header: ") + e.what());
  }
  if (!header.is_object() || !header.contains("format")) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, "checkpoint header lacks a format field");
  }
  if (header["format"] != kCheckpointFormat) {
    throw DataFormatError(DataErrorCode::kVersionMismatch,
                          "expected " + std::string(kCheckpointFormat) + ", found " + header["format"].dump());
  }

  ModelState<float> state;
  try {
    state = ModelState<float>::initialize(header.at("config").get<ModelConfig>(), 0);
    const int stage = header.at("stage").get<int>();
    if (stage != 1 && stage != 2) throw DataFormatError(DataErrorCode::kCorruptHeader, "invalid stage");
    state.stage = static_cast<StateStage>(stage);
  } catch (const nlohmann::json::exception& e) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, std::string("checkpoint header: ") + e.what());
  } catch (const ValidationError& e) {
    throw DataFormatError(DataErrorCode::kCorruptHeader, std::string("checkpoint config: ") + e.what());
  }

  const char* blob = bytes.data() + 8 + len;
  const size_t blob_size = bytes.size() - 8 - len;
  const auto& manifest = header.at("tensors");
  if (!manifest.is_array() || manifest.size() != state.params.size()) {
    throw DataFormatError(DataErrorCode::kShapeMismatch, "tensor manifest does not match the configuration");
  }
  if (header.value("data_bytes", blob_size) > blob_size) {
    throw DataFormatError(DataErrorCode::kCorruptContainer, "checkpoint tensor data truncated");
  }
  for (const auto& entry : manifest) {
    const std::string name = entry.at("name").get<std::string>();
    if (!state.params.contains(name)) {
      throw DataFormatError(DataErrorCode::kShapeMismatch, "unexpected tensor '" + name + "'");
    }
    auto& p = state.params.get(name);
    const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
    if (shape.size() != 2 || shape[0] != p.value.rows() || shape[1] != p.value.cols()) {
      throw DataFormatError(DataErrorCode::kShapeMismatch, "tensor '" + name + "' has unexpected shape");
    }
    const size_t offset = entry.at("offset").get<size_t>();
    const size_t need = static_cast<size_t>(p.value.size()) * 4;
    if (offset + need > blob_size) {
      throw DataFormatError(DataErrorCode::kCorruptContainer, "tensor '" + name + "' truncated");
    }
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      p.value.data()[i] = std::bit_cast<float>(get_u32(blob + offset + 4 * static_cast<size_t>(i)));
    }
  }
  if (metadata) *metadata = header.value("metadata", nlohmann::json::object());
  return state;
}

}  // namespace mpm::net
