#include "mpm/pose/skeleton.hpp"

#include "mpm/errors.hpp"

namespace mpm::pose {

Skeleton::Skeleton()
    : names_{"pelvis",     "r_hip",      "r_knee",   "r_ankle",     "l_hip",   "l_knee",
             "l_ankle",    "spine",      "neck",     "head",        "l_shoulder", "l_elbow",
             "l_wrist",    "r_shoulder", "r_elbow",  "r_wrist"},
      parents_{0, 0, 1, 2, 0, 4, 5, 0, 7, 8, 8, 10, 11, 8, 13, 14},
      lr_pairs_{{joint::kLeftHip, joint::kRightHip},
                {joint::kLeftKnee, joint::kRightKnee},
                {joint::kLeftAnkle, joint::kRightAnkle},
                {joint::kLeftShoulder, joint::kRightShoulder},
                {joint::kLeftElbow, joint::kRightElbow},
                {joint::kLeftWrist, joint::kRightWrist}},
      parts_{{"left_leg", {joint::kLeftHip, joint::kLeftKnee, joint::kLeftAnkle}},
             {"right_leg", {joint::kRightHip, joint::kRightKnee, joint::kRightAnkle}},
             {"left_arm", {joint::kLeftShoulder, joint::kLeftElbow, joint::kLeftWrist}},
             {"right_arm", {joint::kRightShoulder, joint::kRightElbow, joint::kRightWrist}},
             {"torso_head", {joint::kSpine, joint::kNeck, joint::kHead}}} {
  flip_perm_.resize(names_.size());
  for (int j = 0; j < num_joints(); ++j) flip_perm_[j] = j;
  for (auto [l, r] : lr_pairs_) {
    flip_perm_[l] = r;
    flip_perm_[r] = l;
  }
}

const Skeleton& Skeleton::standard() {
  static const Skeleton skeleton;
  return skeleton;
}

const std::vector<int>& Skeleton::body_part(std::string_view name) const {
  for (const auto& part : parts_) {
    if (part.name == name) return part.joints;
  }
  throw ValidationError("unknown body part '" + std::string(name) + "'");
}

std::vector<std::pair<int, int>> Skeleton::bones() const {
  std::vector<std::pair<int, int>> out;
  for (int j = 1; j < num_joints(); ++j) out.emplace_back(j, parents_[j]);
  return out;
}

}  // namespace mpm::pose
