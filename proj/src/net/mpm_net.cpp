#include "mpm/net/mpm_net.hpp"

#include "mpm/errors.hpp"

namespace mpm::net {

BatchMask BatchMask::from_masks(std::span<const mask::JointMask> masks) {
  BatchMask out;
  for (const auto& m : masks) {
    out.points.insert(out.points.end(), m.bits().begin(), m.bits().end());
    const auto full = m.fully_masked_frames();
    out.padded_rows.insert(out.padded_rows.end(), full.begin(), full.end());
  }
  return out;
}

template <typename T>
nn::Matrix<T> to_model_rows(const pose::PoseSequence& seq) {
  const double s = seq.dim() == 3 ? 1.0 / kMillimetersPerModelUnit : 1.0;
  const int width = seq.joints() * seq.dim();
  nn::Matrix<T> out(seq.frames(), width);
  const auto data = seq.data();
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = static_cast<T>(data[i] * s);
  return out;
}

template <typename T>
pose::PoseSequence from_model_rows(const nn::Matrix<T>& rows, int joints, int dim, double fps) {
  if (rows.cols() != joints * dim) throw ValidationError("from_model_rows: width mismatch");
  const double s = dim == 3 ? kMillimetersPerModelUnit : 1.0;
  pose::PoseSequence out(static_cast<int>(rows.rows()), joints, dim, fps);
  auto data = out.data();
  for (Eigen::Index i = 0; i < rows.size(); ++i) data[i] = static_cast<double>(rows.data()[i]) * s;
  return out;
}

template <typename T>
nn::Var MpmNet<T>::dropout(Tape& tape, nn::Var x, const ForwardContext& ctx) {
  if (!ctx.training || ctx.rng == nullptr || state_.config.dropout <= 0.0) return x;
  return tape.dropout(x, static_cast<T>(state_.config.dropout), *ctx.rng);
}

template <typename T>
void MpmNet<T>::check(const Tape& tape, nn::Var v, const std::string& layer, const ForwardContext& ctx) const {
  if (ctx.check_finite && !tape.value(v).allFinite()) {
    throw NumericError("non-finite activation in layer '" + layer + "'");
  }
}

template <typename T>
nn::Var MpmNet<T>::attention_sublayer(Tape& tape, nn::Var x, const std::string& prefix, int seq_len,
                                      const ForwardContext& ctx) {
  const nn::Var a = norm(tape, x, prefix + ".ln1");
  const nn::Var q = linear(tape, a, prefix + ".attn.q");
  const nn::Var k = linear(tape, a, prefix + ".attn.k");
  const nn::Var v = linear(tape, a, prefix + ".attn.v");
  const nn::Var att = tape.attention(q, k, v, state_.config.heads, seq_len);
  const nn::Var o = linear(tape, att, prefix + ".attn.o");
  return tape.add(x, dropout(tape, o, ctx));
}

template <typename T>
nn::Var MpmNet<T>::transformer_block(Tape& tape, nn::Var x, const std::string& prefix, int seq_len,
                                     const ForwardContext& ctx) {
  x = attention_sublayer(tape, x, prefix, seq_len, ctx);
  nn::Var f = norm(tape, x, prefix + ".ln2");
  f = tape.gelu(linear(tape, f, prefix + ".ffn.fc1"));
  f = linear(tape, f, prefix + ".ffn.fc2");
  return tape.add(x, dropout(tape, f, ctx));
}

template <typename T>
nn::Var MpmNet<T>::encode(Tape& tape, const Mat& coords, Modality modality, const BatchMask* mask,
                          const ForwardContext& ctx) {
  const ModelConfig& cfg = state_.config;
  const int dim = point_dim(modality);
  if (coords.cols() != cfg.joints * dim) {
    throw ValidationError(std::string("encode: expected ") + std::to_string(cfg.joints * dim) +
                          " columns for " + to_string(modality) + " input, got " +
                          std::to_string(coords.cols()));
  }
  if (coords.rows() == 0 || coords.rows() % cfg.seq_len != 0) {
    throw ValidationError("encode: rows must be a positive multiple of seq_len " + std::to_string(cfg.seq_len));
  }
  const std::string prefix = modality == Modality::k2D ? "enc2d" : "enc3d";
  nn::Var x = tape.input(coords);
  if (mask && !mask->empty()) {
    if (mask->points.size() != static_cast<size_t>(coords.rows()) * cfg.joints) {
      throw ValidationError("encode: mask does not match batch shape");
    }
    x = tape.substitute_points(x, p(tape, prefix + ".token"), mask->points, dim);
  }
  auto frame_linear = [&](nn::Var in, const std::string& name) {
    return tape.row_linear(in, p(tape, name + ".w"), p(tape, name + ".b"));
  };
  nn::Var h = tape.gelu(frame_linear(x, prefix + ".fc1"));
  h = frame_linear(h, prefix + ".fc2");
  check(tape, h, prefix, ctx);
  return h;
}

template <typename T>
nn::Var MpmNet<T>::shared(Tape& tape, nn::Var x, const ForwardContext& ctx) {
  const ModelConfig& cfg = state_.config;
  if (tape.value(x).cols() != cfg.embed_dim) throw ValidationError("shared: embedding width mismatch");
  for (int i = 0; i < cfg.spatial_blocks; ++i) {
    const std::string prefix = "shared.spatial." + std::to_string(i);
    nn::Var h = norm(tape, x, prefix + ".ln");
    h = tape.gelu(linear(tape, h, prefix + ".fc1"));
    h = linear(tape, h, prefix + ".fc2");
    x = tape.add(x, dropout(tape, h, ctx));
    check(tape, x, prefix, ctx);
  }
  x = tape.add_position(x, p(tape, "shared.temporal.pos"), cfg.seq_len);
  for (int i = 0; i < cfg.temporal_layers; ++i) {
    const std::string prefix = "shared.temporal." + std::to_string(i);
    x = transformer_block(tape, x, prefix, cfg.seq_len, ctx);
    check(tape, x, prefix, ctx);
  }
  x = norm(tape, x, "shared.temporal.ln_out");
  return x;
}

template <typename T>
nn::Var MpmNet<T>::decode_pretrain(Tape& tape, nn::Var x, Modality modality, const BatchMask* mask,
                                   const ForwardContext& ctx) {
  const ModelConfig& cfg = state_.config;
  const std::string prefix = modality == Modality::k2D ? "dec2d" : "dec3d_pre";
  if (mask && !mask->padded_rows.empty()) {
    if (mask->padded_rows.size() != static_cast<size_t>(tape.value(x).rows())) {
      throw ValidationError("decode: padded-row mask does not match batch shape");
    }
    x = tape.replace_rows(x, p(tape, "dec.vt"), mask->padded_rows);
  }
  x = tape.add_position(x, p(tape, prefix + ".pos"), cfg.seq_len);
  x = transformer_block(tape, x, prefix + ".block", cfg.seq_len, ctx);
  x = norm(tape, x, prefix + ".ln_out");
  x = linear(tape, x, prefix + ".head");
  check(tape, x, prefix, ctx);
  return x;
}

template <typename T>
nn::Var MpmNet<T>::decode_finetune(Tape& tape, nn::Var x, const ForwardContext& ctx) {
  const ModelConfig& cfg = state_.config;
  x = tape.add_position(x, p(tape, "dec3d_ft.pos"), cfg.seq_len);
  int len = cfg.seq_len;
  for (size_t i = 0; i < cfg.stride_schedule.size(); ++i) {
    const StrideStage st = cfg.stride_schedule[i];
    const std::string prefix = "dec3d_ft." + std::to_string(i);
    x = attention_sublayer(tape, x, prefix, len, ctx);
    nn::Var f = norm(tape, x, prefix + ".ln2");
    f = tape.gelu(linear(tape, f, prefix + ".fc1"));
    f = tape.unfold(f, len, st.kernel, st.stride);
    f = linear(tape, f, prefix + ".conv");
    const nn::Var skip = tape.select_rows(x, len, st.stride, st.stride / 2);
    x = tape.add(skip, dropout(tape, f, ctx));
    len /= st.stride;
    check(tape, x, prefix, ctx);
  }
  x = norm(tape, x, "dec3d_ft.ln_out");
  return linear(tape, x, "dec3d_ft.head");
}

template <typename T>
nn::Var MpmNet<T>::sequence_head(Tape& tape, nn::Var features) {
  return linear(tape, features, "dec_seq.head");
}

template <typename T>
nn::Var MpmNet<T>::reconstruct(Tape& tape, const Mat& coords, Modality input, Modality output,
                               const BatchMask* mask, const ForwardContext& ctx) {
  const nn::Var f0 = encode(tape, coords, input, mask, ctx);
  const nn::Var fl = shared(tape, f0, ctx);
  return decode_pretrain(tape, fl, output, mask, ctx);
}

template <typename T>
FinetuneOutputs MpmNet<T>::finetune(Tape& tape, const Mat& coords_2d, const BatchMask* mask,
                                    const ForwardContext& ctx) {
  const nn::Var f0 = encode(tape, coords_2d, Modality::k2D, mask, ctx);
  const nn::Var fl = shared(tape, f0, ctx);
  return FinetuneOutputs{decode_finetune(tape, fl, ctx), sequence_head(tape, fl)};
}

template <typename T>
typename MpmNet<T>::Mat MpmNet<T>::encode_sequence(const pose::PoseSequence& seq, Modality modality) {
  if (seq.dim() != point_dim(modality)) throw ValidationError("encode: sequence dim does not match modality");
  if (seq.frames() != state_.config.seq_len) throw ValidationError("encode: sequence length does not match config");
  if (seq.joints() != state_.config.joints) throw ValidationError("encode: joint count does not match config");
  Tape tape(false);
  return tape.value(encode(tape, to_model_rows<T>(seq), modality, nullptr, {}));
}

template <typename T>
typename MpmNet<T>::Mat MpmNet<T>::shared_forward(const Mat& f0) {
  if (f0.rows() != state_.config.seq_len || f0.cols() != state_.config.embed_dim) {
    throw ValidationError("shared_forward: expected seq_len x embed_dim input");
  }
  if (!f0.allFinite()) throw NumericError("non-finite input to shared layers");
  Tape tape(false);
  return tape.value(shared(tape, tape.input(f0), {}));
}

template <typename T>
pose::PoseSequence MpmNet<T>::decode_sequence(const Mat& features, Modality modality) {
  if (features.rows() != state_.config.seq_len || features.cols() != state_.config.embed_dim) {
    throw ValidationError("decode: expected seq_len x embed_dim input");
  }
  Tape tape(false);
  const nn::Var out = decode_pretrain(tape, tape.input(features), modality, nullptr, {});
  return from_model_rows<T>(tape.value(out), state_.config.joints, point_dim(modality));
}

template <typename T>
pose::PoseSequence MpmNet<T>::decode_middle(const Mat& features) {
  if (features.rows() != state_.config.seq_len || features.cols() != state_.config.embed_dim) {
    throw ValidationError("decode: expected seq_len x embed_dim input");
  }
  Tape tape(false);
  const nn::Var out = decode_finetune(tape, tape.input(features), {});
  return from_model_rows<T>(tape.value(out), state_.config.joints, 3);
}

template <typename T>
pose::PoseSequence MpmNet<T>::decode(const Mat& features, Modality modality, DecodeStage stage) {
  if (stage == DecodeStage::kPretrain) return decode_sequence(features, modality);
  if (modality != Modality::k3D) throw ValidationError("decode: the fine-tuning decoder only produces 3D poses");
  return decode_middle(features);
}

template class MpmNet<float>;
template class MpmNet<double>;
template nn::Matrix<float> to_model_rows<float>(const pose::PoseSequence&);
template nn::Matrix<double> to_model_rows<double>(const pose::PoseSequence&);
template pose::PoseSequence from_model_rows<float>(const nn::Matrix<float>&, int, int, double);
template pose::PoseSequence from_model_rows<double>(const nn::Matrix<double>&, int, int, double);

}  // namespace mpm::net
