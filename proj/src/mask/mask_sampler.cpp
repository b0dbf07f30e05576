#include "mpm/mask/mask_sampler.hpp"

#include <cmath>
#include <numeric>

#include "mpm/errors.hpp"

namespace mpm::mask {

std::string to_string(MaskStrategy s) {
  switch (s) {
    case MaskStrategy::kSpatial: return "spatial";
    case MaskStrategy::kTemporal: return "temporal";
    case MaskStrategy::kSpatiotemporal: return "spatiotemporal";
  }
  return "unknown";
}

MaskStrategy parse_strategy(std::string_view name) {
  if (name == "spatial" || name == "tube") return MaskStrategy::kSpatial;
  if (name == "temporal") return MaskStrategy::kTemporal;
  if (name == "spatiotemporal") return MaskStrategy::kSpatiotemporal;
  throw ValidationError("unknown mask strategy '" + std::string(name) + "'");
}

void MaskPolicy::validate(int joints) const {
  if (joints_per_frame < 0 || joints_per_frame > joints) {
    throw ValidationError("mask policy: r_s must lie in [0, " + std::to_string(joints) + "]");
  }
  if (!(frame_ratio >= 0.0 && frame_ratio <= 1.0)) {
    throw ValidationError("mask policy: r_t must lie in [0, 1]");
  }
}

int JointMask::count() const { return std::accumulate(bits_.begin(), bits_.end(), 0); }

double JointMask::ratio() const {
  return bits_.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(bits_.size());
}

bool JointMask::frame_fully_masked(int t) const {
  for (int j = 0; j < joints_; ++j) {
    if (!(*this)(t, j)) return false;
  }
  return joints_ > 0;
}

std::vector<std::uint8_t> JointMask::fully_masked_frames() const {
  std::vector<std::uint8_t> out(frames_);
  for (int t = 0; t < frames_; ++t) out[t] = frame_fully_masked(t) ? 1 : 0;
  return out;
}

double total_mask_ratio(int joints_per_frame, int joints, double frame_ratio) {
  if (joints <= 0) throw ValidationError("total_mask_ratio: joints must be positive");
  MaskPolicy{MaskStrategy::kSpatiotemporal, joints_per_frame, frame_ratio, 0}.validate(joints);
  return frame_ratio + (1.0 - frame_ratio) * static_cast<double>(joints_per_frame) / joints;
}

std::vector<int> sample_without_replacement(std::mt19937_64& rng, int n, int k) {
  if (k < 0 || k > n) throw ValidationError("sample_without_replacement: k out of range");
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

JointMask sample_mask(const MaskPolicy& policy, int frames, int joints) {
  std::mt19937_64 rng(policy.seed);
  return sample_mask(policy, frames, joints, rng);
}

JointMask sample_mask(const MaskPolicy& policy, int frames, int joints, std::mt19937_64& rng) {
  if (frames < 1) throw ValidationError("sample_mask: need at least one frame");
  if (joints < 1) throw ValidationError("sample_mask: need at least one joint");
  policy.validate(joints);

  JointMask mask(frames, joints);
  const double total = total_mask_ratio(policy.joints_per_frame, joints, policy.frame_ratio);

  switch (policy.strategy) {
    case MaskStrategy::kSpatial: {
      // Tubes: the same joints in every frame.
      const int k = std::min(joints, static_cast<int>(std::ceil(total * joints - 1e-9)));
      for (int j : sample_without_replacement(rng, joints, k)) {
        for (int t = 0; t < frames; ++t) mask.set(t, j, true);
      }
      break;
    }
    case MaskStrategy::kTemporal: {
      const int k = std::min(frames, static_cast<int>(std::lround(total * frames)));
      for (int t : sample_without_replacement(rng, frames, k)) {
        for (int j = 0; j < joints; ++j) mask.set(t, j, true);
      }
      break;
    }
    case MaskStrategy::kSpatiotemporal: {
      const int full = std::min(frames, static_cast<int>(std::lround(policy.frame_ratio * frames)));
      std::vector<std::uint8_t> is_full(frames, 0);
      for (int t : sample_without_replacement(rng, frames, full)) is_full[t] = 1;
      for (int t = 0; t < frames; ++t) {
        if (is_full[t]) {
          for (int j = 0; j < joints; ++j) mask.set(t, j, true);
        } else {
          for (int j : sample_without_replacement(rng, joints, policy.joints_per_frame)) mask.set(t, j, true);
        }
      }
      break;
    }
  }
  return mask;
}

pose::PoseSequence apply_mask_joint_level(const pose::PoseSequence& seq, const JointMask& mask,
                                          std::span<const double> token) {
  if (mask.frames() != seq.frames() || mask.joints() != seq.joints()) {
    throw ValidationError("apply_mask_joint_level: mask shape does not match sequence");
  }
  if (static_cast<int>(token.size()) != seq.dim()) {
    throw ValidationError("apply_mask_joint_level: token dimension does not match sequence");
  }
  pose::PoseSequence out = seq;
  for (int t = 0; t < seq.frames(); ++t) {
    for (int j = 0; j < seq.joints(); ++j) {
      if (!mask(t, j)) continue;
      for (int c = 0; c < seq.dim(); ++c) out.at(t, j, c) = token[c];
    }
  }
  return out;
}

}  // namespace mpm::mask
