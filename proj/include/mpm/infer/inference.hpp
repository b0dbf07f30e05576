#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpm/data/record.hpp"
#include "mpm/mask/mask_sampler.hpp"
#include "mpm/net/model_state.hpp"
#include "mpm/pose/metrics.hpp"

namespace mpm::infer {

/// Joints hidden over a span of frames.
struct Occlusion {
  std::vector<int> joints;
  int frame_begin = 0;
  /// Exclusive; -1 means through the last frame.
  int frame_end = -1;

  static Occlusion of_joints(std::vector<int> joints, int frame_begin = 0, int frame_end = -1);
  /// Throws ValidationError for an unknown part name.
  static Occlusion of_body_part(const std::string& part, int frame_begin = 0, int frame_end = -1);

  bool empty() const { return joints.empty() || frame_begin == frame_end; }
  mask::JointMask to_mask(int frames, int joint_count) const;
};

struct LiftResult {
  pose::PoseSequence pred3d;
  std::optional<pose::MetricReport> report;
};

struct CompletionResult {
  pose::PoseSequence pred3d;
  mask::JointMask mask;
  std::optional<double> mpjpe_mm;
  /// Error over the occluded (frame, joint) entries only.
  std::optional<double> occluded_mpjpe_mm;
};

/// Throws ValidationError("decoder not fine-tuned") for a Stage-I state.
void require_finetuned(const net::ModelState<float>& state);

/// One 3D pose per input frame from the fine-tuned decoder; metrics when gt3d is given.
LiftResult lift_sequence(net::ModelState<float>& state, const pose::PoseSequence& seq2d,
                         const pose::PoseSequence* gt3d = nullptr);

/// Lifting with occluded 2D joints replaced by the 2D mask token.
CompletionResult complete_from_partial_2d(net::ModelState<float>& state, const pose::PoseSequence& seq2d,
                                          const Occlusion& occlusion, const pose::PoseSequence* gt3d = nullptr);

/// In-paints occluded 3D joints through the 3D encoder and pretraining 3D
/// decoder. Hidden entries of seq3d do not influence the output; metrics compare the
/// prediction against seq3d itself. With pass_through, observed joints are
/// copied from the input unchanged.
CompletionResult complete_from_partial_3d(net::ModelState<float>& state, const pose::PoseSequence& seq3d,
                                          const Occlusion& occlusion, bool pass_through = true);

/// Zero-velocity baseline: every masked joint repeats its last visible
/// position, or the next visible one when none precedes it, or stays at the
/// input value when the joint is never visible.
pose::PoseSequence copy_last_visible(const pose::PoseSequence& seq, const mask::JointMask& mask);

/// Mean Euclidean error over masked entries; NaN when nothing is masked.
double masked_mpjpe(const pose::PoseSequence& pred, const pose::PoseSequence& gt, const mask::JointMask& mask);

/// Per-coordinate mean (joints * 3 values, mm) over every frame of the records with 3D.
std::vector<double> mean_pose_3d(const std::vector<data::SequenceRecord>& records);

/// frames copies of one flattened pose.
pose::PoseSequence repeat_pose(const std::vector<double>& pose, int frames, int joints, double fps = 50.0);

/// Frames of all sequences, in order. Shapes other than frame count must agree.
pose::PoseSequence concat_frames(const std::vector<pose::PoseSequence>& parts);

}  // namespace mpm::infer
