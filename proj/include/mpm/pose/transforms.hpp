#pragma once

#include "mpm/pose/pose_sequence.hpp"

namespace mpm::pose {

/// Maps pixel coordinates into [-1, 1] by dividing both axes by the longer
/// image side: x' = 2x/S - 1, y' = 2y/S - 1 with S = max(w, h). The shorter
/// axis therefore occupies a sub-interval starting at -1.
PoseSequence normalize_2d(const PoseSequence& raw, double image_w, double image_h);

/// Inverse of normalize_2d.
PoseSequence denormalize_2d(const PoseSequence& normalized, double image_w, double image_h);

/// Subtracts the root joint from every joint, per frame.
PoseSequence root_center_3d(const PoseSequence& raw);

/// Negates x and swaps left/right joint channels. Exact involution.
PoseSequence horizontal_flip(const PoseSequence& p, const Skeleton& skeleton = Skeleton::standard());

}  // namespace mpm::pose
