#include "mpm/pose/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "mpm/errors.hpp"

namespace mpm::pose {

namespace {

void require_image_size(double image_w, double image_h) {
  if (!(image_w > 0.0) || !(image_h > 0.0) || !std::isfinite(image_w) || !std::isfinite(image_h)) {
    throw ValidationError("image size must be positive and finite");
  }
}

}  // namespace

PoseSequence normalize_2d(const PoseSequence& raw, double image_w, double image_h) {
  require_image_size(image_w, image_h);
  if (raw.dim() != 2) throw ValidationError("normalize_2d expects 2D input");
  raw.validate();
  const double side = std::max(image_w, image_h);
  PoseSequence out = raw;
  for (double& v : out.data()) v = 2.0 * v / side - 1.0;
  return out;
}

PoseSequence denormalize_2d(const PoseSequence& normalized, double image_w, double image_h) {
  require_image_size(image_w, image_h);
  if (normalized.dim() != 2) throw ValidationError("denormalize_2d expects 2D input");
  const double side = std::max(image_w, image_h);
  PoseSequence out = normalized;
  for (double& v : out.data()) v = (v + 1.0) * side / 2.0;
  return out;
}

PoseSequence root_center_3d(const PoseSequence& raw) {
  if (raw.dim() != 3) throw ValidationError("root_center_3d expects 3D input");
  raw.validate();
  PoseSequence out = raw;
  for (int t = 0; t < out.frames(); ++t) {
    const Eigen::Vector3d root = raw.point3(t, 0);
    for (int j = 0; j < out.joints(); ++j) out.point3(t, j) -= root;
  }
  return out;
}

PoseSequence horizontal_flip(const PoseSequence& p, const Skeleton& skeleton) {
  if (p.joints() != skeleton.num_joints()) throw ValidationError("flip: joint count mismatch");
  const auto& perm = skeleton.flip_permutation();
  PoseSequence out(p.frames(), p.joints(), p.dim(), p.fps());
  for (int t = 0; t < p.frames(); ++t) {
    for (int j = 0; j < p.joints(); ++j) {
      const int src = perm[j];
      out.at(t, j, 0) = -p.at(t, src, 0);
      for (int c = 1; c < p.dim(); ++c) out.at(t, j, c) = p.at(t, src, c);
    }
  }
  return out;
}

}  // namespace mpm::pose
