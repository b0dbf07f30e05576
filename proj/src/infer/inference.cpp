#include "mpm/infer/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpm/errors.hpp"
#include "mpm/log.hpp"
#include "mpm/train/evaluation.hpp"

namespace mpm::infer {

Occlusion Occlusion::of_joints(std::vector<int> joints, int frame_begin, int frame_end) {
  return Occlusion{std::move(joints), frame_begin, frame_end};
}

Occlusion Occlusion::of_body_part(const std::string& part, int frame_begin, int frame_end) {
  return Occlusion{pose::Skeleton::standard().body_part(part), frame_begin, frame_end};
}

mask::JointMask Occlusion::to_mask(int frames, int joint_count) const {
  const int end = frame_end < 0 ? frames : frame_end;
  if (frame_begin < 0 || end > frames || frame_begin > end) throw ValidationError("occlusion frame span out of range");
  mask::JointMask m(frames, joint_count);
  for (int j : joints) {
    if (j < 0 || j >= joint_count) throw ValidationError("occlusion joint index out of range");
    for (int t = frame_begin; t < end; ++t) m.set(t, j, true);
  }
  return m;
}

void require_finetuned(const net::ModelState<float>& state) {
  if (state.stage != net::StateStage::kFinetuned) throw ValidationError("decoder not fine-tuned");
}

LiftResult lift_sequence(net::ModelState<float>& state, const pose::PoseSequence& seq2d,
                         const pose::PoseSequence* gt3d) {
  require_finetuned(state);
  seq2d.validate();
  net::MpmNet<float> model(state);
  LiftResult r{train::lift_2d(model, seq2d, net::DecodeStage::kFinetune), std::nullopt};
  if (gt3d) r.report = pose::evaluate(r.pred3d, *gt3d);
  return r;
}

namespace {

void warn_if_everything_hidden(const mask::JointMask& m) {
  if (m.frames() > 0 && m.count() == m.frames() * m.joints()) {
    warn("every joint of every frame is occluded; the prediction reflects the learned prior only");
  }
}

}  // namespace

CompletionResult complete_from_partial_2d(net::ModelState<float>& state, const pose::PoseSequence& seq2d,
                                          const Occlusion& occlusion, const pose::PoseSequence* gt3d) {
  require_finetuned(state);
  seq2d.validate();
  CompletionResult r;
  r.mask = occlusion.to_mask(seq2d.frames(), seq2d.joints());
  warn_if_everything_hidden(r.mask);
  net::MpmNet<float> model(state);
  // An empty occlusion takes the plain lifting path so the two agree bit for bit.
  r.pred3d = r.mask.count() == 0 ? train::lift_2d(model, seq2d, net::DecodeStage::kFinetune)
                                 : train::lift_2d(model, seq2d, net::DecodeStage::kFinetune, &r.mask);
  if (gt3d) {
    r.mpjpe_mm = pose::mpjpe(r.pred3d, *gt3d);
    r.occluded_mpjpe_mm = masked_mpjpe(r.pred3d, *gt3d, r.mask);
  }
  return r;
}

CompletionResult complete_from_partial_3d(net::ModelState<float>& state, const pose::PoseSequence& seq3d,
                                          const Occlusion& occlusion, bool pass_through) {
  seq3d.validate();
  if (seq3d.dim() != 3) throw ValidationError("complete: expected a 3D sequence");
  CompletionResult r;
  r.mask = occlusion.to_mask(seq3d.frames(), seq3d.joints());
  warn_if_everything_hidden(r.mask);
  if (pass_through && r.mask.count() == 0) {
    r.pred3d = seq3d;
  } else {
    net::MpmNet<float> model(state);
    r.pred3d = train::reconstruct_sequence(model, seq3d, net::Modality::k3D, net::Modality::k3D, &r.mask);
    if (pass_through) {
      for (int t = 0; t < seq3d.frames(); ++t) {
        for (int j = 0; j < seq3d.joints(); ++j) {
          if (r.mask(t, j)) continue;
          for (int c = 0; c < 3; ++c) r.pred3d.at(t, j, c) = seq3d.at(t, j, c);
        }
      }
    }
  }
  r.mpjpe_mm = pose::mpjpe(r.pred3d, seq3d);
  r.occluded_mpjpe_mm = masked_mpjpe(r.pred3d, seq3d, r.mask);
  return r;
}

pose::PoseSequence copy_last_visible(const pose::PoseSequence& seq, const mask::JointMask& mask) {
  if (mask.frames() != seq.frames() || mask.joints() != seq.joints()) {
    throw ValidationError("copy_last_visible: mask shape mismatch");
  }
  pose::PoseSequence out = seq;
  for (int j = 0; j < seq.joints(); ++j) {
    int last = -1;
    for (int t = 0; t < seq.frames(); ++t) {
      if (!mask(t, j)) {
        last = t;
        continue;
      }
      int src = last;
      if (src < 0) {
        for (int u = t + 1; u < seq.frames(); ++u) {
          if (!mask(u, j)) {
            src = u;
            break;
          }
        }
      }
      if (src < 0) continue;
      for (int c = 0; c < seq.dim(); ++c) out.at(t, j, c) = seq.at(src, j, c);
    }
  }
  return out;
}

double masked_mpjpe(const pose::PoseSequence& pred, const pose::PoseSequence& gt, const mask::JointMask& mask) {
  pose::require_same_shape(pred, gt, "masked_mpjpe");
  if (mask.frames() != gt.frames() || mask.joints() != gt.joints()) throw ValidationError("masked_mpjpe: mask shape mismatch");
  double sum = 0.0;
  long long n = 0;
  for (int t = 0; t < gt.frames(); ++t) {
    for (int j = 0; j < gt.joints(); ++j) {
      if (!mask(t, j)) continue;
      double d2 = 0.0;
      for (int c = 0; c < gt.dim(); ++c) {
        const double d = pred.at(t, j, c) - gt.at(t, j, c);
        d2 += d * d;
      }
      sum += std::sqrt(d2);
      ++n;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> mean_pose_3d(const std::vector<data::SequenceRecord>& records) {
  std::vector<double> mean;
  long long frames = 0;
  for (const auto& r : records) {
    if (!r.has_3d()) continue;
    const auto data = r.pose3d->data();
    if (mean.empty()) mean.assign(static_cast<size_t>(r.pose3d->joints()) * 3, 0.0);
    if (data.size() != mean.size() * r.frames()) throw ValidationError("mean_pose_3d: records disagree in joint count");
    for (size_t i = 0; i < data.size(); ++i) mean[i % mean.size()] += data[i];
    frames += r.frames();
  }
  if (frames == 0) throw ValidationError("mean_pose_3d: no 3D frames");
  for (double& v : mean) v /= static_cast<double>(frames);
  return mean;
}

pose::PoseSequence repeat_pose(const std::vector<double>& pose, int frames, int joints, double fps) {
  if (pose.size() != static_cast<size_t>(joints) * 3) throw ValidationError("repeat_pose: pose size mismatch");
  pose::PoseSequence out(frames, joints, 3, fps);
  auto data = out.data();
  for (size_t i = 0; i < data.size(); ++i) data[i] = pose[i % pose.size()];
  return out;
}

pose::PoseSequence concat_frames(const std::vector<pose::PoseSequence>& parts) {
  if (parts.empty()) throw ValidationError("concat_frames: nothing to concatenate");
  int frames = 0;
  for (const auto& p : parts) {
    if (p.joints() != parts[0].joints() || p.dim() != parts[0].dim()) {
      throw ValidationError("concat_frames: sequences disagree in shape");
    }
    frames += p.frames();
  }
  pose::PoseSequence out(frames, parts[0].joints(), parts[0].dim(), parts[0].fps());
  auto dst = out.data().begin();
  for (const auto& p : parts) dst = std::copy(p.data().begin(), p.data().end(), dst);
  return out;
}

}  // namespace mpm::infer
