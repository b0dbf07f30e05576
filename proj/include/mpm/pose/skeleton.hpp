#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mpm::pose {

inline constexpr int kNumJoints = 16;

namespace joint {
enum : int {
  kPelvis = 0,
  kRightHip,
  kRightKnee,
  kRightAnkle,
  kLeftHip,
  kLeftKnee,
  kLeftAnkle,
  kSpine,
  kNeck,
  kHead,
  kLeftShoulder,
  kLeftElbow,
  kLeftWrist,
  kRightShoulder,
  kRightElbow,
  kRightWrist,
};
}  // namespace joint

struct BodyPart {
  std::string name;
  std::vector<int> joints;
};

/// The 16-joint skeleton shared by every dataset. Root is the pelvis (index 0)
/// and is its own parent.
class Skeleton {
 public:
  static const Skeleton& standard();

  int num_joints() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& joint_names() const { return names_; }
  const std::vector<int>& parents() const { return parents_; }
  int parent(int j) const { return parents_.at(j); }
  const std::vector<std::pair<int, int>>& left_right_pairs() const { return lr_pairs_; }
  const std::vector<BodyPart>& body_parts() const { return parts_; }

  /// Joint indices of the named body part; throws ValidationError for unknown names.
  const std::vector<int>& body_part(std::string_view name) const;

  /// Index permutation that swaps every left/right pair (identity elsewhere).
  const std::vector<int>& flip_permutation() const { return flip_perm_; }

  /// (child, parent) for every non-root joint.
  std::vector<std::pair<int, int>> bones() const;

 private:
  Skeleton();

  std::vector<std::string> names_;
  std::vector<int> parents_;
  std::vector<std::pair<int, int>> lr_pairs_;
  std::vector<BodyPart> parts_;
  std::vector<int> flip_perm_;
};

}  // namespace mpm::pose
