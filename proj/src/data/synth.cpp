#include "mpm/data/synth.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Geometry>

#include "mpm/errors.hpp"
#include "mpm/pose/transforms.hpp"

namespace mpm::data {

namespace {

using Eigen::Matrix3d;
using Eigen::Vector3d;
using pose::kNumJoints;
namespace J = pose::joint;

constexpr double kPi = std::numbers::pi;

Matrix3d rot_x(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitX()).toRotationMatrix(); }
Matrix3d rot_y(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitY()).toRotationMatrix(); }
Matrix3d rot_z(double a) { return Eigen::AngleAxisd(a, Vector3d::UnitZ()).toRotationMatrix(); }

// Rest offsets (mm) from each joint's parent. World frame: y up, the body
// faces +z, the body's left side is +x.
const std::array<Vector3d, kNumJoints>& rest_offsets() {
  static const std::array<Vector3d, kNumJoints> offsets{
      Vector3d(0, 0, 0),       Vector3d(-100, 0, 0),   Vector3d(0, -450, 0),  Vector3d(0, -420, 0),
      Vector3d(100, 0, 0),     Vector3d(0, -450, 0),   Vector3d(0, -420, 0),  Vector3d(0, 240, 0),
      Vector3d(0, 260, 0),     Vector3d(0, 140, 0),    Vector3d(160, -20, 0), Vector3d(0, -280, 0),
      Vector3d(0, -250, 0),    Vector3d(-160, -20, 0), Vector3d(0, -280, 0),  Vector3d(0, -250, 0)};
  return offsets;
}

struct Body {
  std::array<Vector3d, kNumJoints> offsets;
};

Body subject_body(std::uint64_t seed, int subject) {
  std::mt19937_64 rng(seed ^ (0xB0D1E5ULL * static_cast<std::uint64_t>(subject + 1)));
  std::uniform_real_distribution<double> overall(0.88, 1.12);
  std::uniform_real_distribution<double> per_bone(0.96, 1.04);
  const double s = overall(rng);
  Body body;
  for (int j = 0; j < kNumJoints; ++j) body.offsets[j] = rest_offsets()[j] * (s * per_bone(rng));
  return body;
}

// Per-clip random motion parameters.
struct Motion {
  MotionFamily family;
  double amplitude;
  double freq_hz;
  double phase;
  double heading;
  int reach_side;  // 0 left, 1 right, 2 both
};

struct Pose {
  Matrix3d root = Matrix3d::Identity();
  std::array<Matrix3d, kNumJoints> local;
  Vector3d translation = Vector3d::Zero();
  Pose() { local.fill(Matrix3d::Identity()); }
};

Pose motion_pose(const Motion& m, double t, double duration) {
  Pose p;
  const double a = m.amplitude;
  const double phi = 2.0 * kPi * m.freq_hz * t + m.phase;
  const double s = std::sin(phi);
  auto& L = p.local;

  switch (m.family) {
    case MotionFamily::kWalk: {
      const double hip = 0.45 * a * s;
      L[J::kLeftHip] = rot_x(-hip);
      L[J::kRightHip] = rot_x(hip);
      const double kl = 0.5 + 0.5 * std::sin(phi + kPi / 3.0);
      const double kr = 0.5 + 0.5 * std::sin(phi + kPi + kPi / 3.0);
      L[J::kLeftKnee] = rot_x(0.05 + 0.6 * a * kl * kl);
      L[J::kRightKnee] = rot_x(0.05 + 0.6 * a * kr * kr);
      L[J::kLeftShoulder] = rot_x(0.35 * a * s) * rot_z(0.08);
      L[J::kRightShoulder] = rot_x(-0.35 * a * s) * rot_z(-0.08);
      L[J::kLeftElbow] = rot_x(-(0.3 + 0.15 * s));
      L[J::kRightElbow] = rot_x(-(0.3 - 0.15 * s));
      L[J::kSpine] = rot_x(0.06);
      p.root = rot_y(m.heading + 0.05 * s);
      const double speed = 1100.0 * a;
      p.translation = Vector3d(std::sin(m.heading), 0.0, std::cos(m.heading)) * speed * (t - duration / 2.0);
      p.translation.y() = 15.0 * std::sin(2.0 * phi);
      break;
    }
    case MotionFamily::kReach: {
      const double r = 0.5 - 0.5 * std::cos(phi);
      const double flex = 1.4 * a * r;
      const double elbow = 0.8 * (1.0 - r) + 0.1;
      const bool left = m.reach_side != 1;
      const bool right = m.reach_side != 0;
      L[J::kLeftShoulder] = (left ? rot_x(-flex) : Matrix3d::Identity()) * rot_z(0.1);
      L[J::kRightShoulder] = (right ? rot_x(-flex) : Matrix3d::Identity()) * rot_z(-0.1);
      L[J::kLeftElbow] = rot_x(-(left ? elbow : 0.2));
      L[J::kRightElbow] = rot_x(-(right ? elbow : 0.2));
      L[J::kSpine] = rot_x(0.25 * a * r);
      L[J::kNeck] = rot_x(-0.1 * a * r);
      L[J::kLeftKnee] = rot_x(0.05);
      L[J::kRightKnee] = rot_x(0.05);
      p.root = rot_y(m.heading);
      break;
    }
    case MotionFamily::kSquat: {
      const double r = 0.5 - 0.5 * std::cos(phi);
      const double hip = 1.3 * a * r;
      const double knee = std::min(2.2, 2.0 * a * r);
      L[J::kLeftHip] = rot_x(-hip) * rot_z(0.05);
      L[J::kRightHip] = rot_x(-hip) * rot_z(-0.05);
      L[J::kLeftKnee] = rot_x(knee);
      L[J::kRightKnee] = rot_x(knee);
      L[J::kSpine] = rot_x(0.4 * a * r);
      L[J::kLeftShoulder] = rot_x(-1.0 * r) * rot_z(0.05);
      L[J::kRightShoulder] = rot_x(-1.0 * r) * rot_z(-0.05);
      L[J::kLeftElbow] = rot_x(-0.2);
      L[J::kRightElbow] = rot_x(-0.2);
      p.root = rot_y(m.heading);
      break;
    }
    case MotionFamily::kIdleSway: {
      p.root = rot_y(m.heading) * rot_z(0.04 * a * s) * rot_x(0.02 * a * std::sin(0.7 * phi));
      L[J::kNeck] = rot_y(0.15 * a * std::sin(0.5 * phi));
      L[J::kLeftShoulder] = rot_x(0.08 * a * std::sin(phi + 1.0)) * rot_z(0.06);
      L[J::kRightShoulder] = rot_x(-0.08 * a * std::sin(phi + 1.0)) * rot_z(-0.06);
      L[J::kLeftElbow] = rot_x(-0.15);
      L[J::kRightElbow] = rot_x(-0.15);
      L[J::kLeftKnee] = rot_x(0.05 + 0.03 * a * s);
      L[J::kRightKnee] = rot_x(0.05 - 0.03 * a * s);
      break;
    }
  }
  return p;
}

// World-frame joint positions (mm).
std::array<Vector3d, kNumJoints> forward_kinematics(const Body& body, const Pose& pose) {
  const auto& parents = pose::Skeleton::standard().parents();
  std::array<Matrix3d, kNumJoints> global;
  std::array<Vector3d, kNumJoints> pos;
  global[0] = pose.root * pose.local[0];
  pos[0] = pose.translation;
  for (int j = 1; j < kNumJoints; ++j) {
    const int par = parents[j];
    pos[j] = pos[par] + global[par] * body.offsets[j];
    global[j] = global[par] * pose.local[j];
  }
  return pos;
}

struct Extrinsics {
  Matrix3d world_to_cam;
  Vector3d center;
};

Extrinsics look_at(const Vector3d& center, const Vector3d& target) {
  const Vector3d forward = (target - center).normalized();
  const Vector3d right = forward.cross(Vector3d::UnitY()).normalized();
  const Vector3d down = forward.cross(right);
  Extrinsics e;
  e.world_to_cam.row(0) = right.transpose();
  e.world_to_cam.row(1) = down.transpose();
  e.world_to_cam.row(2) = forward.transpose();
  e.center = center;
  return e;
}

Eigen::Vector2d project(const CameraIntrinsics& cam, const Vector3d& x) {
  return {cam.focal_px * x.x() / x.z() + cam.cx, cam.focal_px * x.y() / x.z() + cam.cy};
}

}  // namespace

std::string to_string(MotionFamily f) {
  switch (f) {
    case MotionFamily::kWalk: return "walk";
    case MotionFamily::kReach: return "reach";
    case MotionFamily::kSquat: return "squat";
    case MotionFamily::kIdleSway: return "idle_sway";
  }
  return "unknown";
}

MotionFamily parse_family(std::string_view name) {
  if (name == "walk") return MotionFamily::kWalk;
  if (name == "reach") return MotionFamily::kReach;
  if (name == "squat") return MotionFamily::kSquat;
  if (name == "idle_sway" || name == "idle-sway") return MotionFamily::kIdleSway;
  throw ValidationError("unknown motion family '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  if (n_sequences < 0) throw ValidationError("synth: n_sequences must be nonnegative");
  if (length < 1) throw ValidationError("synth: length must be positive");
  if (!(fps > 0.0)) throw ValidationError("synth: fps must be positive");
  if (families.empty()) throw ValidationError("synth: at least one motion family required");
  if (!(noise_sigma_mm >= 0.0)) throw ValidationError("synth: noise sigma must be nonnegative");
  if (n_subjects < 1) throw ValidationError("synth: need at least one subject");
  if (!(focal_px > 0.0) || !(image_size_px > 0.0)) throw ValidationError("synth: invalid camera");
  if (!(min_distance_mm > 0.0) || max_distance_mm < min_distance_mm) {
    throw ValidationError("synth: invalid camera distance range");
  }
}

SequenceRecord synth_record(const SynthSpec& spec, int index, MotionFamily family) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(index + 1)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int n_families = static_cast<int>(spec.families.size());
  const int subject = 1 + (index / n_families) % spec.n_subjects;
  const Body body = subject_body(spec.seed, subject);

  Motion motion{family, 0.7 + 0.6 * unit(rng), 1.0, 2.0 * kPi * unit(rng), 2.0 * kPi * unit(rng),
                static_cast<int>(unit(rng) * 3.0) % 3};
  const double freq_jitter = 0.85 + 0.3 * unit(rng);
  switch (family) {
    case MotionFamily::kWalk: motion.freq_hz = 0.9 * freq_jitter; break;
    case MotionFamily::kReach: motion.freq_hz = 0.4 * freq_jitter; break;
    case MotionFamily::kSquat: motion.freq_hz = 0.35 * freq_jitter; break;
    case MotionFamily::kIdleSway: motion.freq_hz = 0.25 * freq_jitter; break;
  }

  const double azimuth = 2.0 * kPi * unit(rng);
  double distance = spec.min_distance_mm + (spec.max_distance_mm - spec.min_distance_mm) * unit(rng);
  const double height = -300.0 + 800.0 * unit(rng);

  CameraIntrinsics cam;
  cam.focal_px = spec.focal_px;
  cam.width = cam.height = spec.image_size_px;
  cam.cx = cam.cy = spec.image_size_px / 2.0;
  cam.tag = "cam_az" + std::to_string(static_cast<int>(azimuth * 180.0 / kPi));

  const int frames = spec.length;
  const double duration = frames / spec.fps;
  std::vector<std::array<Vector3d, kNumJoints>> world(frames);
  const double rest_ankle_y = forward_kinematics(body, Pose{})[J::kLeftAnkle].y();
  for (int t = 0; t < frames; ++t) {
    Pose pose = motion_pose(motion, t / spec.fps, duration);
    auto pos = forward_kinematics(body, pose);
    // Keep the lower foot on the floor.
    const double lowest = std::min(pos[J::kLeftAnkle].y(), pos[J::kRightAnkle].y());
    const Vector3d lift(0.0, rest_ankle_y - lowest + (family == MotionFamily::kWalk ? pose.translation.y() : 0.0), 0.0);
    for (auto& x : pos) x += lift;
    world[t] = pos;
  }

  std::normal_distribution<double> noise(0.0, spec.noise_sigma_mm > 0.0 ? spec.noise_sigma_mm : 1.0);
  SequenceRecord rec;
  rec.id = "synth_" + std::to_string(index);
  rec.subject = subject;
  rec.action = to_string(family);
  rec.fps = spec.fps;

  // Back the camera off until every joint projects inside the image.
  for (int attempt = 0;; ++attempt) {
    const Vector3d center(distance * std::sin(azimuth), height, distance * std::cos(azimuth));
    const Extrinsics ext = look_at(center, Vector3d(0.0, -100.0, 0.0));
    pose::PoseSequence p3(frames, kNumJoints, 3, spec.fps);
    pose::PoseSequence root(frames, 1, 3, spec.fps);
    pose::PoseSequence px(frames, kNumJoints, 2, spec.fps);
    bool inside = true;
    std::mt19937_64 noise_rng(rng());
    for (int t = 0; t < frames; ++t) {
      const Vector3d root_cam = ext.world_to_cam * (world[t][0] - ext.center);
      root.point3(t, 0) = root_cam;
      for (int j = 0; j < kNumJoints; ++j) {
        const Vector3d cam_pt = ext.world_to_cam * (world[t][j] - ext.center);
        p3.point3(t, j) = cam_pt - root_cam;
        Vector3d observed = cam_pt;
        if (spec.noise_sigma_mm > 0.0) {
          observed += Vector3d(noise(noise_rng), noise(noise_rng), noise(noise_rng));
        }
        const Eigen::Vector2d uv = project(cam, observed);
        px.at(t, j, 0) = uv.x();
        px.at(t, j, 1) = uv.y();
        inside = inside && uv.x() >= 0.0 && uv.x() <= cam.width && uv.y() >= 0.0 && uv.y() <= cam.height;
      }
    }
    if (inside || attempt >= 20) {
      rec.camera = cam;
      rec.pose3d = std::move(p3);
      rec.root_camera = std::move(root);
      rec.pose2d = pose::normalize_2d(px, cam.width, cam.height);
      break;
    }
    distance *= 1.1;
  }
  return rec;
}

std::vector<SequenceRecord> synth_generate(const SynthSpec& spec) {
  spec.validate();
  std::vector<SequenceRecord> out;
  out.reserve(spec.n_sequences);
  for (int i = 0; i < spec.n_sequences; ++i) {
    out.push_back(synth_record(spec, i, spec.families[i % spec.families.size()]));
  }
  return out;
}

pose::PoseSequence reproject(const SequenceRecord& rec) {
  if (!rec.pose3d || !rec.root_camera) throw ValidationError("reproject: record lacks 3D or root trajectory");
  const auto& p3 = *rec.pose3d;
  pose::PoseSequence px(p3.frames(), p3.joints(), 2, rec.fps);
  for (int t = 0; t < p3.frames(); ++t) {
    const Vector3d root = rec.root_camera->point3(t, 0);
    for (int j = 0; j < p3.joints(); ++j) {
      const Eigen::Vector2d uv = project(rec.camera, p3.point3(t, j) + root);
      px.at(t, j, 0) = uv.x();
      px.at(t, j, 1) = uv.y();
    }
  }
  return pose::normalize_2d(px, rec.camera.width, rec.camera.height);
}

std::vector<std::vector<SequenceRecord>> scaled_subsets(const SynthSpec& spec, int base,
                                                        const std::vector<int>& multipliers) {
  if (base < 1) throw ValidationError("scaled_subsets: base must be positive");
  int largest = 0;
  for (int m : multipliers) {
    if (m < 1) throw ValidationError("scaled_subsets: multipliers must be positive");
    largest = std::max(largest, m);
  }
  SynthSpec pool_spec = spec;
  pool_spec.n_sequences = base * largest;
  const auto pool = synth_generate(pool_spec);
  std::vector<std::vector<SequenceRecord>> out;
  for (int m : multipliers) out.emplace_back(pool.begin(), pool.begin() + base * m);
  return out;
}

}  // namespace mpm::data
