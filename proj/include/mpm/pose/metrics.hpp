#pragma once

#include <vector>

#include "mpm/pose/pose_sequence.hpp"

namespace mpm::pose {

inline constexpr double kDefaultPckThresholdMm = 150.0;

/// 5, 10, ..., 150 mm.
std::vector<double> default_auc_thresholds();

struct MetricReport {
  double mpjpe_mm = 0.0;
  double p_mpjpe_mm = 0.0;
  double pck = 0.0;
  double auc = 0.0;
  std::vector<double> per_joint_mpjpe;
  /// Frames whose ground truth had zero spread and fell back to translation-only alignment.
  int degenerate_frames = 0;
};

/// Mean Euclidean distance over all (frame, joint) pairs.
double mpjpe(const PoseSequence& pred, const PoseSequence& gt);

/// Mean Euclidean distance restricted to the listed joints.
double mpjpe_joints(const PoseSequence& pred, const PoseSequence& gt, const std::vector<int>& joints);

std::vector<double> per_joint_mpjpe(const PoseSequence& pred, const PoseSequence& gt);

struct ProcrustesResult {
  double error_mm = 0.0;
  int degenerate_frames = 0;
};

/// Per-frame similarity alignment (rotation, translation, uniform scale) of
/// pred onto gt followed by MPJPE.
ProcrustesResult p_mpjpe_detailed(const PoseSequence& pred, const PoseSequence& gt);
double p_mpjpe(const PoseSequence& pred, const PoseSequence& gt);

/// Similarity-aligned copy of a single frame; exposed for tests and tools.
PoseSequence procrustes_align(const PoseSequence& pred, const PoseSequence& gt);

struct PckAuc {
  double pck = 0.0;
  double auc = 0.0;
};

/// pck counts (frame, joint) errors strictly below threshold_mm; auc is the
/// mean pck over auc_thresholds.
PckAuc pck_auc(const PoseSequence& pred, const PoseSequence& gt, double threshold_mm,
               const std::vector<double>& auc_thresholds);

MetricReport evaluate(const PoseSequence& pred, const PoseSequence& gt,
                      double threshold_mm = kDefaultPckThresholdMm,
                      const std::vector<double>& auc_thresholds = default_auc_thresholds());

}  // namespace mpm::pose
