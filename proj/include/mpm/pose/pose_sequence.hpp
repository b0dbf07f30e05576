#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mpm/pose/skeleton.hpp"

namespace mpm::pose {

/// Frames x joints x dim array of joint coordinates, stored frame-major then
/// joint-major then coordinate. dim is 2 (normalized image coordinates) or 3
/// (millimeters, root-relative).
class PoseSequence {
 public:
  PoseSequence() = default;
  PoseSequence(int frames, int joints, int dim, double fps = 50.0);

  int frames() const { return frames_; }
  int joints() const { return joints_; }
  int dim() const { return dim_; }
  double fps() const { return fps_; }
  void set_fps(double fps) { fps_ = fps; }
  bool empty() const { return data_.empty(); }

  double& at(int t, int j, int c) { return data_[index(t, j, c)]; }
  double at(int t, int j, int c) const { return data_[index(t, j, c)]; }

  Eigen::Map<Eigen::Vector3d> point3(int t, int j) { return Eigen::Map<Eigen::Vector3d>(&at(t, j, 0)); }
  Eigen::Map<const Eigen::Vector3d> point3(int t, int j) const {
    return Eigen::Map<const Eigen::Vector3d>(data_.data() + index(t, j, 0));
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> frame(int t) const {
    return std::span<const double>(data_).subspan(static_cast<size_t>(t) * joints_ * dim_,
                                                  static_cast<size_t>(joints_) * dim_);
  }

  bool same_shape(const PoseSequence& other) const {
    return frames_ == other.frames_ && joints_ == other.joints_ && dim_ == other.dim_;
  }
  bool all_finite() const;

  /// Throws ValidationError on non-finite entries or an unsupported dim.
  void validate() const;

  /// Frames [begin, begin + count).
  PoseSequence slice(int begin, int count) const;

  friend bool operator==(const PoseSequence&, const PoseSequence&) = default;

 private:
  size_t index(int t, int j, int c) const {
    return (static_cast<size_t>(t) * joints_ + j) * dim_ + c;
  }

  int frames_ = 0;
  int joints_ = 0;
  int dim_ = 0;
  double fps_ = 50.0;
  std::vector<double> data_;
};

/// Throws ValidationError unless both sequences have identical shape.
void require_same_shape(const PoseSequence& a, const PoseSequence& b, const char* what);

}  // namespace mpm::pose
