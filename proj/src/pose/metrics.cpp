#include "mpm/pose/metrics.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mpm/errors.hpp"

namespace mpm::pose {

namespace {

void require_3d_pair(const PoseSequence& pred, const PoseSequence& gt, const char* what) {
  require_same_shape(pred, gt, what);
  if (pred.dim() != 3) throw ValidationError(std::string(what) + ": expects 3D poses");
}

using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

Eigen::Map<const FrameMatrix> frame_matrix(const PoseSequence& p, int t) {
  return Eigen::Map<const FrameMatrix>(p.frame(t).data(), p.joints(), 3);
}

// Returns the aligned frame; sets degenerate when gt has no spread.
FrameMatrix align_frame(const Eigen::Ref<const FrameMatrix>& x, const Eigen::Ref<const FrameMatrix>& y,
                        bool& degenerate) {
  const Eigen::RowVector3d mu_x = x.colwise().mean();
  const Eigen::RowVector3d mu_y = y.colwise().mean();
  const FrameMatrix x0 = x.rowwise() - mu_x;
  const FrameMatrix y0 = y.rowwise() - mu_y;
  const double norm_x = x0.squaredNorm();
  const double norm_y = y0.squaredNorm();
  constexpr double kEps = 1e-12;

  degenerate = norm_y <= kEps;
  if (degenerate) return x0.rowwise() + mu_y;
  if (norm_x <= kEps) return FrameMatrix(y0.rows(), 3).setZero().rowwise() + mu_y;

  const Eigen::Matrix3d h = x0.transpose() * y0;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Vector3d s = svd.singularValues();
  Eigen::Matrix3d r = v * svd.matrixU().transpose();
  if (r.determinant() < 0.0) {
    v.col(2) *= -1.0;
    s(2) *= -1.0;
    r = v * svd.matrixU().transpose();
  }
  const double scale = s.sum() / norm_x;
  return (scale * (x0 * r.transpose())).rowwise() + mu_y;
}

}  // namespace

std::vector<double> default_auc_thresholds() {
  std::vector<double> t;
  for (int mm = 5; mm <= 150; mm += 5) t.push_back(mm);
  return t;
}

double mpjpe(const PoseSequence& pred, const PoseSequence& gt) {
  require_3d_pair(pred, gt, "mpjpe");
  if (pred.frames() == 0) return 0.0;
  double sum = 0.0;
  for (int t = 0; t < pred.frames(); ++t) {
    for (int j = 0; j < pred.joints(); ++j) sum += (pred.point3(t, j) - gt.point3(t, j)).norm();
  }
  return sum / (static_cast<double>(pred.frames()) * pred.joints());
}

double mpjpe_joints(const PoseSequence& pred, const PoseSequence& gt, const std::vector<int>& joints) {
  require_3d_pair(pred, gt, "mpjpe_joints");
  if (joints.empty() || pred.frames() == 0) return 0.0;
  double sum = 0.0;
  for (int t = 0; t < pred.frames(); ++t) {
    for (int j : joints) {
      if (j < 0 || j >= pred.joints()) throw ValidationError("mpjpe_joints: joint index out of range");
      sum += (pred.point3(t, j) - gt.point3(t, j)).norm();
    }
  }
  return sum / (static_cast<double>(pred.frames()) * joints.size());
}

std::vector<double> per_joint_mpjpe(const PoseSequence& pred, const PoseSequence& gt) {
  require_3d_pair(pred, gt, "per_joint_mpjpe");
  std::vector<double> out(pred.joints(), 0.0);
  if (pred.frames() == 0) return out;
  for (int t = 0; t < pred.frames(); ++t) {
    for (int j = 0; j < pred.joints(); ++j) out[j] += (pred.point3(t, j) - gt.point3(t, j)).norm();
  }
  for (double& v : out) v /= pred.frames();
  return out;
}

PoseSequence procrustes_align(const PoseSequence& pred, const PoseSequence& gt) {
  require_3d_pair(pred, gt, "procrustes_align");
  PoseSequence out(pred.frames(), pred.joints(), 3, pred.fps());
  for (int t = 0; t < pred.frames(); ++t) {
    bool degenerate = false;
    const FrameMatrix aligned = align_frame(frame_matrix(pred, t), frame_matrix(gt, t), degenerate);
    Eigen::Map<FrameMatrix>(&out.at(t, 0, 0), pred.joints(), 3) = aligned;
  }
  return out;
}

ProcrustesResult p_mpjpe_detailed(const PoseSequence& pred, const PoseSequence& gt) {
  require_3d_pair(pred, gt, "p_mpjpe");
  ProcrustesResult result;
  if (pred.frames() == 0) return result;
  double sum = 0.0;
  for (int t = 0; t < pred.frames(); ++t) {
    bool degenerate = false;
    const auto y = frame_matrix(gt, t);
    const FrameMatrix aligned = align_frame(frame_matrix(pred, t), y, degenerate);
    if (degenerate) ++result.degenerate_frames;
    sum += (aligned - y).rowwise().norm().sum();
  }
  result.error_mm = sum / (static_cast<double>(pred.frames()) * pred.joints());
  return result;
}

double p_mpjpe(const PoseSequence& pred, const PoseSequence& gt) {
  return p_mpjpe_detailed(pred, gt).error_mm;
}

PckAuc pck_auc(const PoseSequence& pred, const PoseSequence& gt, double threshold_mm,
               const std::vector<double>& auc_thresholds) {
  require_3d_pair(pred, gt, "pck_auc");
  if (!(threshold_mm > 0.0)) throw ValidationError("pck threshold must be positive");
  if (auc_thresholds.empty()) throw ValidationError("auc thresholds must be nonempty");
  for (size_t i = 1; i < auc_thresholds.size(); ++i) {
    if (!(auc_thresholds[i] > auc_thresholds[i - 1])) {
      throw ValidationError("auc thresholds must be strictly ascending");
    }
  }

  std::vector<double> errors;
  errors.reserve(static_cast<size_t>(pred.frames()) * pred.joints());
  for (int t = 0; t < pred.frames(); ++t) {
    for (int j = 0; j < pred.joints(); ++j) errors.push_back((pred.point3(t, j) - gt.point3(t, j)).norm());
  }
  PckAuc out;
  if (errors.empty()) return out;

  auto fraction_below = [&](double threshold) {
    size_t hits = 0;
    for (double e : errors) hits += e < threshold ? 1 : 0;
    return static_cast<double>(hits) / errors.size();
  };
  out.pck = fraction_below(threshold_mm);
  double acc = 0.0;
  for (double th : auc_thresholds) acc += fraction_below(th);
  out.auc = acc / auc_thresholds.size();
  return out;
}

MetricReport evaluate(const PoseSequence& pred, const PoseSequence& gt, double threshold_mm,
                      const std::vector<double>& auc_thresholds) {
  MetricReport report;
  report.mpjpe_mm = mpjpe(pred, gt);
  const ProcrustesResult pa = p_mpjpe_detailed(pred, gt);
  report.p_mpjpe_mm = pa.error_mm;
  report.degenerate_frames = pa.degenerate_frames;
  const PckAuc pck = pck_auc(pred, gt, threshold_mm, auc_thresholds);
  report.pck = pck.pck;
  report.auc = pck.auc;
  report.per_joint_mpjpe = per_joint_mpjpe(pred, gt);
  return report;
}

}  // namespace mpm::pose
