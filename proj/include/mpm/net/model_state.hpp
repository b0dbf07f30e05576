#pragma once

#include <cstdint>
#include <string>

#include "mpm/net/model_config.hpp"
#include "mpm/nn/parameters.hpp"

namespace mpm::net {

/// 3D coordinates enter and leave the network in meters; datasets and metrics
/// use millimeters.
inline constexpr double kMillimetersPerModelUnit = 1000.0;

/// Training stage a state has completed: kPretrained states have no
/// fine-tuned lifting decoder yet.
enum class StateStage : int { kPretrained = 1, kFinetuned = 2 };

/// All learnable parameters of the network plus the configuration they were
/// built for.
///
/// Parameter names are grouped by prefix:
///   enc2d.*, enc3d.*        frame-wise encoders and their coordinate-space mask tokens
///   shared.spatial.*        shared per-frame MLP
///   shared.temporal.*       shared temporal transformer
///   dec.vt                  embedding-space mask token
///   dec2d.*, dec3d_pre.*    single-block pretraining decoders
///   dec3d_ft.*              strided fine-tuning decoder
///   dec_seq.*               full-sequence linear head used during fine-tuning
template <typename T>
struct ModelState {
  ModelConfig config;
  StateStage stage = StateStage::kPretrained;
  nn::ParameterStore<T> params;

  /// Fresh parameters; deterministic in (config, seed).
  static ModelState initialize(const ModelConfig& config, std::uint64_t seed);

  template <typename U>
  ModelState<U> cast() const {
    return ModelState<U>{config, stage, params.template cast<U>()};
  }
};

struct ParamCensus {
  std::int64_t encoders = 0;
  std::int64_t shared = 0;
  std::int64_t decoders = 0;
  std::int64_t total = 0;

  double shared_fraction() const { return total > 0 ? static_cast<double>(shared) / total : 0.0; }
};

template <typename T>
ParamCensus param_census(const ModelState<T>& state);

/// Builds a fine-tuning state from a pretrained one: encoders, shared trunk and
/// mask tokens are copied verbatim, the pretraining 3D decoder block (position
/// embedding, attention sublayer, output norm and head) seeds the first stride
/// block, and the remaining stride blocks and the sequence head are freshly
/// initialized from seed.
template <typename T>
ModelState<T> transplant_pretrained(const ModelState<T>& pre, const ModelConfig& post_config,
                                    std::uint64_t seed);

/// Names copied from the pretraining decoder by transplant_pretrained, as
/// (source, destination) pairs.
std::vector<std::pair<std::string, std::string>> transplant_map(const ModelConfig& config);

extern template struct ModelState<float>;
extern template struct ModelState<double>;

}  // namespace mpm::net
