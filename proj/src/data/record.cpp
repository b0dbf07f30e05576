#include "mpm/data/record.hpp"

#include <cmath>

#include "mpm/errors.hpp"

namespace mpm::data {

int SequenceRecord::frames() const {
  if (pose2d) return pose2d->frames();
  if (pose3d) return pose3d->frames();
  return 0;
}

void SequenceRecord::validate() const {
  if (!pose2d && !pose3d) throw ValidationError("record '" + id + "' has no pose data");
  if (pose2d) {
    if (pose2d->dim() != 2) throw ValidationError("record '" + id + "': 2D sequence has wrong dim");
    pose2d->validate();
  }
  if (pose3d) {
    if (pose3d->dim() != 3) throw ValidationError("record '" + id + "': 3D sequence has wrong dim");
    pose3d->validate();
  }
  if (pose2d && pose3d && (pose2d->frames() != pose3d->frames() || pose2d->joints() != pose3d->joints())) {
    throw ValidationError("record '" + id + "': 2D and 3D sequences differ in shape");
  }
  if (root_camera && (root_camera->frames() != frames() || root_camera->joints() != 1 || root_camera->dim() != 3)) {
    throw ValidationError("record '" + id + "': root trajectory has wrong shape");
  }
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ValidationError("record '" + id + "': fps must be positive");
}

}  // namespace mpm::data
