#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace mpm::net {

enum class Modality { k2D, k3D };

inline int point_dim(Modality m) { return m == Modality::k2D ? 2 : 3; }
inline const char* to_string(Modality m) { return m == Modality::k2D ? "2d" : "3d"; }

/// One strided temporal convolution in the fine-tuning decoder.
struct StrideStage {
  int kernel = 3;
  int stride = 3;
  friend bool operator==(const StrideStage&, const StrideStage&) = default;
};

struct ModelConfig {
  int joints = 16;
  int seq_len = 243;
  int embed_dim = 256;
  int spatial_blocks = 3;
  int temporal_layers = 4;
  int heads = 8;
  int mlp_ratio = 4;
  std::vector<StrideStage> stride_schedule;
  double dropout = 0.1;

  /// Paper-scale defaults for seq_len 81 or 243; any power of 3 is accepted.
  static ModelConfig defaults(int seq_len = 243);
  /// Small configuration for desk-scale training runs.
  static ModelConfig toy(int seq_len = 27);
  /// Tiny configuration used by the finite-difference gradient checks.
  static ModelConfig tiny();

  /// Throws ValidationError when an invariant is violated.
  void validate() const;

  /// seq_len / (product of strides) after each stage, starting with seq_len.
  std::vector<int> stride_lengths() const;

  int hidden_dim() const { return embed_dim * mlp_ratio; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Schedule of (3, 3) stages reducing seq_len to one frame.
std::vector<StrideStage> power_of_three_schedule(int seq_len);

void to_json(nlohmann::json& j, const StrideStage& s);
void from_json(const nlohmann::json& j, StrideStage& s);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

}  // namespace mpm::net
