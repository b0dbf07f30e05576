#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpm/mask/mask_sampler.hpp"
#include "mpm/net/model_state.hpp"
#include "mpm/nn/tape.hpp"
#include "mpm/pose/pose_sequence.hpp"

namespace mpm::net {

/// Per-forward settings. Dropout is active only when training is set and an
/// rng is supplied.
struct ForwardContext {
  bool training = false;
  std::mt19937_64* rng = nullptr;
  /// Check every major layer output for NaN/Inf and throw NumericError naming it.
  bool check_finite = true;
};

/// Masking applied to one batch: per (row, joint) flags for the coordinate
/// token, plus per-row flags for rows padded with the embedding token before
/// the decoder. Rows are (sample * seq_len + frame).
struct BatchMask {
  std::vector<std::uint8_t> points;
  std::vector<std::uint8_t> padded_rows;

  bool empty() const { return points.empty(); }
  /// Stacks per-sample joint masks; padded rows are the fully masked frames.
  static BatchMask from_masks(std::span<const mask::JointMask> masks);
};

enum class DecodeStage { kPretrain, kFinetune };

struct FinetuneOutputs {
  nn::Var middle;    // batch x (joints * 3)
  nn::Var sequence;  // (batch * seq_len) x (joints * 3)
};

/// Graph builder for the single-stream network over a ModelState. Inputs are
/// (batch * seq_len) x (joints * dim) matrices in model units: normalized
/// image coordinates for 2D, meters for 3D.
template <typename T>
class MpmNet {
 public:
  using Mat = nn::Matrix<T>;
  using Tape = nn::Tape<T>;

  explicit MpmNet(ModelState<T>& state) : state_(state) {}

  const ModelConfig& config() const { return state_.config; }
  ModelState<T>& state() { return state_; }

  /// Frame-wise encoder; masked points are replaced by the modality's
  /// coordinate token before encoding. Output (batch * seq_len) x embed_dim.
  nn::Var encode(Tape& tape, const Mat& coords, Modality modality, const BatchMask* mask,
                 const ForwardContext& ctx);

  /// Shared spatial MLP followed by the shared temporal transformer.
  nn::Var shared(Tape& tape, nn::Var f0, const ForwardContext& ctx);

  /// Single-block pretraining decoder for either modality. Rows flagged in
  /// mask->padded_rows are replaced by the embedding token first.
  nn::Var decode_pretrain(Tape& tape, nn::Var features, Modality modality, const BatchMask* mask,
                          const ForwardContext& ctx);

  /// Strided fine-tuning decoder: one 3D pose per sample (the middle frame).
  nn::Var decode_finetune(Tape& tape, nn::Var features, const ForwardContext& ctx);

  /// Linear full-sequence 3D head on the trunk output.
  nn::Var sequence_head(Tape& tape, nn::Var features);

  /// encode -> shared -> decode_pretrain(output).
  nn::Var reconstruct(Tape& tape, const Mat& coords, Modality input, Modality output,
                      const BatchMask* mask, const ForwardContext& ctx);

  /// 2D input -> (middle-frame 3D, full-sequence 3D).
  FinetuneOutputs finetune(Tape& tape, const Mat& coords_2d, const BatchMask* mask,
                           const ForwardContext& ctx);

  // Value-level conveniences on single sequences.

  /// L x embed_dim embedding of one sequence.
  Mat encode_sequence(const pose::PoseSequence& seq, Modality modality);
  /// Shared trunk on one embedding.
  Mat shared_forward(const Mat& f0);
  /// Pretraining decode of one trunk output to an L x J x dim sequence in model units.
  pose::PoseSequence decode_sequence(const Mat& features, Modality modality);
  /// Fine-tuning decode of one trunk output to a 1 x J x 3 pose in model units.
  pose::PoseSequence decode_middle(const Mat& features);
  /// Dispatches to decode_sequence / decode_middle; the fine-tuning stage only
  /// exists for 3D output.
  pose::PoseSequence decode(const Mat& features, Modality modality, DecodeStage stage);

 private:
  nn::Var p(Tape& tape, const std::string& name) { return tape.param(state_.params.get(name)); }
  nn::Var linear(Tape& tape, nn::Var x, const std::string& name) {
    return tape.linear(x, p(tape, name + ".w"), p(tape, name + ".b"));
  }
  nn::Var norm(Tape& tape, nn::Var x, const std::string& name) {
    return tape.layer_norm(x, p(tape, name + ".g"), p(tape, name + ".b"));
  }
  nn::Var attention_sublayer(Tape& tape, nn::Var x, const std::string& prefix, int seq_len,
                             const ForwardContext& ctx);
  nn::Var transformer_block(Tape& tape, nn::Var x, const std::string& prefix, int seq_len,
                            const ForwardContext& ctx);
  nn::Var dropout(Tape& tape, nn::Var x, const ForwardContext& ctx);
  void check(const Tape& tape, nn::Var v, const std::string& layer, const ForwardContext& ctx) const;

  ModelState<T>& state_;
};

/// Flattens a sequence to seq_len x (joints * dim), scaling 3D millimeters to model units.
template <typename T>
nn::Matrix<T> to_model_rows(const pose::PoseSequence& seq);

/// Inverse of to_model_rows.
template <typename T>
pose::PoseSequence from_model_rows(const nn::Matrix<T>& rows, int joints, int dim, double fps = 50.0);

extern template class MpmNet<float>;
extern template class MpmNet<double>;

}  // namespace mpm::net
