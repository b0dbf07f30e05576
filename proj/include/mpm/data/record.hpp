#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mpm/pose/pose_sequence.hpp"

namespace mpm::data {

/// Pinhole intrinsics. Image y grows downward.
struct CameraIntrinsics {
  std::string tag;
  double focal_px = 1150.0;
  double cx = 500.0;
  double cy = 500.0;
  double width = 1000.0;
  double height = 1000.0;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// One motion clip. pose2d is normalized image coordinates; pose3d is
/// root-relative millimeters in the camera frame; root_camera (frames x 1 x 3)
/// is the root position in the camera frame, kept so 3D can be re-projected.
struct SequenceRecord {
  std::string id;
  int subject = 0;
  std::string action;
  double fps = 50.0;
  CameraIntrinsics camera;
  std::optional<pose::PoseSequence> pose2d;
  std::optional<pose::PoseSequence> pose3d;
  std::optional<pose::PoseSequence> root_camera;

  int frames() const;
  bool has_2d() const { return pose2d.has_value(); }
  bool has_3d() const { return pose3d.has_value(); }
  bool paired() const { return has_2d() && has_3d(); }

  /// Throws ValidationError when modality lengths differ or invariants fail.
  void validate() const;
};

}  // namespace mpm::data
