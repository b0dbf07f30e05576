#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpm/pose/pose_sequence.hpp"

namespace mpm::mask {

enum class MaskStrategy { kSpatial, kTemporal, kSpatiotemporal };

std::string to_string(MaskStrategy s);
MaskStrategy parse_strategy(std::string_view name);

struct MaskPolicy {
  MaskStrategy strategy = MaskStrategy::kSpatiotemporal;
  int joints_per_frame = 5;     // r_s
  double frame_ratio = 0.6;     // r_t
  std::uint64_t seed = 0;

  void validate(int joints) const;
};

/// frames x joints booleans, true = masked.
class JointMask {
 public:
  JointMask() = default;
  JointMask(int frames, int joints, bool value = false)
      : frames_(frames), joints_(joints), bits_(static_cast<size_t>(frames) * joints, value ? 1 : 0) {}

  int frames() const { return frames_; }
  int joints() const { return joints_; }

  bool operator()(int t, int j) const { return bits_[static_cast<size_t>(t) * joints_ + j] != 0; }
  void set(int t, int j, bool v) { bits_[static_cast<size_t>(t) * joints_ + j] = v ? 1 : 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }
  int count() const;
  double ratio() const;
  bool frame_fully_masked(int t) const;
  /// Per-frame flag for frames whose joints are all masked.
  std::vector<std::uint8_t> fully_masked_frames() const;

  friend bool operator==(const JointMask&, const JointMask&) = default;

 private:
  int frames_ = 0;
  int joints_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Fraction of masked entries implied by masking a frame_ratio share of whole
/// frames plus joints_per_frame of the joints in every remaining frame.
double total_mask_ratio(int joints_per_frame, int joints, double frame_ratio);

/// Draws a mask for a frames x joints sequence. Deterministic in
/// (policy.seed, frames, joints).
JointMask sample_mask(const MaskPolicy& policy, int frames, int joints);

/// Same as sample_mask but draws from a caller-owned generator.
JointMask sample_mask(const MaskPolicy& policy, int frames, int joints, std::mt19937_64& rng);

/// Replaces every masked (frame, joint) coordinate vector by token. Unmasked
/// entries are copied bit-exactly.
pose::PoseSequence apply_mask_joint_level(const pose::PoseSequence& seq, const JointMask& mask,
                                          std::span<const double> token);

/// k distinct indices drawn uniformly from [0, n), in draw order.
std::vector<int> sample_without_replacement(std::mt19937_64& rng, int n, int k);

}  // namespace mpm::mask
