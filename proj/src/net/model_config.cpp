#include "mpm/net/model_config.hpp"

#include "mpm/errors.hpp"

namespace mpm::net {

std::vector<StrideStage> power_of_three_schedule(int seq_len) {
  if (seq_len < 1) throw ValidationError("sequence length must be positive");
  std::vector<StrideStage> out;
  int n = seq_len;
  while (n > 1) {
    if (n % 3 != 0) {
      throw ValidationError("sequence length " + std::to_string(seq_len) +
                            " is not a power of 3; supply an explicit stride schedule");
    }
    out.push_back({3, 3});
    n /= 3;
  }
  return out;
}

ModelConfig ModelConfig::defaults(int seq_len) {
  ModelConfig c;
  c.seq_len = seq_len;
  c.stride_schedule = power_of_three_schedule(seq_len);
  return c;
}

ModelConfig ModelConfig::toy(int seq_len) {
  ModelConfig c;
  c.seq_len = seq_len;
  c.embed_dim = 32;
  c.spatial_blocks = 1;
  c.temporal_layers = 2;
  c.heads = 4;
  c.mlp_ratio = 2;
  c.dropout = 0.0;
  c.stride_schedule = power_of_three_schedule(seq_len);
  return c;
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.seq_len = 9;
  c.embed_dim = 8;
  c.spatial_blocks = 1;
  c.temporal_layers = 2;
  c.heads = 2;
  c.mlp_ratio = 2;
  c.dropout = 0.0;
  c.stride_schedule = power_of_three_schedule(9);
  return c;
}

void ModelConfig::validate() const {
  if (joints <= 0) throw ValidationError("config: joints must be positive");
  if (seq_len <= 0) throw ValidationError("config: seq_len must be positive");
  if (embed_dim <= 0 || heads <= 0 || embed_dim % heads != 0) {
    throw ValidationError("config: embed_dim must be a positive multiple of heads");
  }
  if (spatial_blocks < 0 || temporal_layers < 0) throw ValidationError("config: negative layer count");
  if (mlp_ratio <= 0) throw ValidationError("config: mlp_ratio must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("config: dropout must lie in [0, 1)");
  int n = seq_len;
  for (const auto& s : stride_schedule) {
    if (s.stride < 1 || s.kernel < s.stride) {
      throw ValidationError("config: each stride stage needs kernel >= stride >= 1");
    }
    if (n % s.stride != 0) {
      throw ValidationError("config: stride schedule does not divide the sequence length");
    }
    n /= s.stride;
  }
  if (n != 1) throw ValidationError("config: stride schedule must reduce seq_len to exactly 1");
}

std::vector<int> ModelConfig::stride_lengths() const {
  std::vector<int> out{seq_len};
  int n = seq_len;
  for (const auto& s : stride_schedule) {
    n /= s.stride;
    out.push_back(n);
  }
  return out;
}

void to_json(nlohmann::json& j, const StrideStage& s) { j = nlohmann::json{{"kernel", s.kernel}, {"stride", s.stride}}; }

void from_json(const nlohmann::json& j, StrideStage& s) {
  s.kernel = j.at("kernel").get<int>();
  s.stride = j.at("stride").get<int>();
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"joints", c.joints},
                     {"seq_len", c.seq_len},
                     {"embed_dim", c.embed_dim},
                     {"spatial_blocks", c.spatial_blocks},
                     {"temporal_layers", c.temporal_layers},
                     {"heads", c.heads},
                     {"mlp_ratio", c.mlp_ratio},
                     {"stride_schedule", c.stride_schedule},
                     {"dropout", c.dropout}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.joints = j.value("joints", d.joints);
  c.seq_len = j.value("seq_len", d.seq_len);
  c.embed_dim = j.value("embed_dim", d.embed_dim);
  c.spatial_blocks = j.value("spatial_blocks", d.spatial_blocks);
  c.temporal_layers = j.value("temporal_layers", d.temporal_layers);
  c.heads = j.value("heads", d.heads);
  c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
  c.dropout = j.value("dropout", d.dropout);
  if (j.contains("stride_schedule")) {
    c.stride_schedule = j.at("stride_schedule").get<std::vector<StrideStage>>();
  } else {
    c.stride_schedule = power_of_three_schedule(c.seq_len);
  }
}

}  // namespace mpm::net
