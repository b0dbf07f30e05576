#include "mpm/pose/pose_sequence.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mpm/errors.hpp"

namespace mpm::pose {

PoseSequence::PoseSequence(int frames, int joints, int dim, double fps)
    : frames_(frames), joints_(joints), dim_(dim), fps_(fps) {
  if (frames < 0 || joints <= 0 || (dim != 2 && dim != 3)) {
    throw ValidationError("invalid pose sequence shape " + std::to_string(frames) + "x" +
                          std::to_string(joints) + "x" + std::to_string(dim));
  }
  data_.assign(static_cast<size_t>(frames) * joints * dim, 0.0);
}

bool PoseSequence::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void PoseSequence::validate() const {
  if (dim_ != 2 && dim_ != 3) throw ValidationError("pose dim must be 2 or 3");
  if (!all_finite()) throw ValidationError("pose sequence contains non-finite values");
}

PoseSequence PoseSequence::slice(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > frames_) {
    throw ValidationError("slice out of range");
  }
  PoseSequence out(count, joints_, dim_, fps_);
  const size_t stride = static_cast<size_t>(joints_) * dim_;
  std::copy_n(data_.begin() + begin * stride, count * stride, out.data_.begin());
  return out;
}

void require_same_shape(const PoseSequence& a, const PoseSequence& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(what) + ": shape mismatch (" + std::to_string(a.frames()) +
                          "x" + std::to_string(a.joints()) + "x" + std::to_string(a.dim()) +
                          " vs " + std::to_string(b.frames()) + "x" + std::to_string(b.joints()) +
                          "x" + std::to_string(b.dim()) + ")");
  }
}

}  // namespace mpm::pose
