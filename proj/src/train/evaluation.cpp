#include "mpm/train/evaluation.hpp"

#include <algorithm>

#include "mpm/errors.hpp"
#include "mpm/pose/metrics.hpp"

namespace mpm::train {

using net::Modality;

namespace {

// Copies the frames of each window (clamped to the sequence) into model rows,
// along with the matching mask points.
template <typename Fn>
void for_window_chunks(const pose::PoseSequence& seq, const std::vector<int>& starts, int seq_len,
                       const mask::JointMask* mask, int batch_windows, Fn&& fn) {
  const nn::Matrix<float> rows = net::to_model_rows<float>(seq);
  const int n = seq.frames();
  const int joints = seq.joints();
  for (size_t c0 = 0; c0 < starts.size(); c0 += batch_windows) {
    const size_t count = std::min<size_t>(batch_windows, starts.size() - c0);
    nn::Matrix<float> x(static_cast<Eigen::Index>(count) * seq_len, rows.cols());
    net::BatchMask bm;
    if (mask) {
      bm.points.resize(static_cast<size_t>(x.rows()) * joints);
      bm.padded_rows.resize(x.rows());
    }
    for (size_t w = 0; w < count; ++w) {
      for (int i = 0; i < seq_len; ++i) {
        const int src = std::clamp(starts[c0 + w] + i, 0, n - 1);
        const Eigen::Index dst = static_cast<Eigen::Index>(w) * seq_len + i;
        x.row(dst) = rows.row(src);
        if (mask) {
          for (int j = 0; j < joints; ++j) bm.points[dst * joints + j] = (*mask)(src, j) ? 1 : 0;
          bm.padded_rows[dst] = mask->frame_fully_masked(src) ? 1 : 0;
        }
      }
    }
    fn(c0, count, x, mask ? &bm : nullptr);
  }
}

void require_mask_shape(const pose::PoseSequence& seq, const mask::JointMask* mask) {
  if (mask && (mask->frames() != seq.frames() || mask->joints() != seq.joints())) {
    throw ValidationError("occlusion mask shape does not match the sequence");
  }
}

std::vector<int> tile_starts(int n, int seq_len) {
  std::vector<int> starts;
  for (int s = 0; s < n; s += seq_len) starts.push_back(s);
  return starts;
}

}  // namespace

pose::PoseSequence reconstruct_sequence(net::MpmNet<float>& model, const pose::PoseSequence& seq,
                                        Modality input, Modality output, const mask::JointMask* mask,
                                        int batch_windows) {
  const net::ModelConfig& cfg = model.config();
  if (seq.dim() != net::point_dim(input)) throw ValidationError("reconstruct: sequence dim does not match modality");
  if (seq.joints() != cfg.joints) throw ValidationError("reconstruct: joint count does not match config");
  if (seq.frames() < 1) throw ValidationError("reconstruct: empty sequence");
  require_mask_shape(seq, mask);
  const int L = cfg.seq_len;
  const int n = seq.frames();
  const int od = net::point_dim(output);
  nn::Matrix<float> out_rows(n, cfg.joints * od);
  const auto starts = tile_starts(n, L);
  for_window_chunks(seq, starts, L, mask, batch_windows,
                    [&](size_t c0, size_t count, const nn::Matrix<float>& x, const net::BatchMask* bm) {
                      nn::Tape<float> tape(false);
                      const nn::Var y = model.reconstruct(tape, x, input, output, bm, {});
                      const auto& v = tape.value(y);
                      for (size_t w = 0; w < count; ++w) {
                        for (int i = 0; i < L; ++i) {
                          const int t = starts[c0 + w] + i;
                          if (t < n) out_rows.row(t) = v.row(static_cast<Eigen::Index>(w) * L + i);
                        }
                      }
                    });
  return net::from_model_rows<float>(out_rows, cfg.joints, od, seq.fps());
}

pose::PoseSequence lift_2d(net::MpmNet<float>& model, const pose::PoseSequence& seq2d, net::DecodeStage stage,
                           const mask::JointMask* occlusion, int batch_windows) {
  if (stage == net::DecodeStage::kPretrain) {
    return reconstruct_sequence(model, seq2d, Modality::k2D, Modality::k3D, occlusion, batch_windows);
  }
  const net::ModelConfig& cfg = model.config();
  if (seq2d.dim() != 2) throw ValidationError("lift: expected a 2D sequence");
  if (seq2d.joints() != cfg.joints) throw ValidationError("lift: joint count does not match config");
  if (seq2d.frames() < 1) throw ValidationError("lift: empty sequence");
  require_mask_shape(seq2d, occlusion);
  const int L = cfg.seq_len;
  const int n = seq2d.frames();
  std::vector<int> starts(n);
  for (int t = 0; t < n; ++t) starts[t] = t - L / 2;
  nn::Matrix<float> out_rows(n, cfg.joints * 3);
  for_window_chunks(seq2d, starts, L, occlusion, batch_windows,
                    [&](size_t c0, size_t count, const nn::Matrix<float>& x, const net::BatchMask* bm) {
                      nn::Tape<float> tape(false);
                      const net::ForwardContext ctx;
                      const nn::Var f0 = model.encode(tape, x, Modality::k2D, bm, ctx);
                      const nn::Var fl = model.shared(tape, f0, ctx);
                      const nn::Var mid = model.decode_finetune(tape, fl, ctx);
                      out_rows.middleRows(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(count)) =
                          tape.value(mid);
                    });
  return net::from_model_rows<float>(out_rows, cfg.joints, 3, seq2d.fps());
}

double validation_mpjpe(net::MpmNet<float>& model, const std::vector<data::SequenceRecord>& records,
                        net::DecodeStage stage, int max_records, const mask::MaskPolicy* policy) {
  double sum = 0.0;
  long long frames = 0;
  int used = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.paired()) continue;
    if (max_records > 0 && used >= max_records) break;
    mask::JointMask m;
    if (policy) {
      mask::MaskPolicy p = *policy;
      p.seed = policy->seed * 1000003ULL + i;
      m = mask::sample_mask(p, r.frames(), r.pose2d->joints());
    }
    const pose::PoseSequence pred = lift_2d(model, *r.pose2d, stage, policy ? &m : nullptr);
    sum += pose::mpjpe(pred, *r.pose3d) * r.frames();
    frames += r.frames();
    ++used;
  }
  if (frames == 0) throw ValidationError("validation: no paired records");
  return sum / static_cast<double>(frames);
}

}  // namespace mpm::train
