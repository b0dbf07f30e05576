#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mpm/data/record.hpp"

namespace mpm::data {

enum class MotionFamily { kWalk, kReach, kSquat, kIdleSway };

std::string to_string(MotionFamily f);
MotionFamily parse_family(std::string_view name);

struct SynthSpec {
  int n_sequences = 100;
  int length = 60;
  double fps = 50.0;
  std::vector<MotionFamily> families{MotionFamily::kWalk, MotionFamily::kReach, MotionFamily::kSquat,
                                     MotionFamily::kIdleSway};
  /// Std-dev of the 3D jitter (mm) applied before projection; 3D itself stays clean.
  double noise_sigma_mm = 0.0;
  int n_subjects = 7;
  double focal_px = 1150.0;
  double image_size_px = 1000.0;
  double min_distance_mm = 4500.0;
  double max_distance_mm = 6000.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Generates paired 2D/3D clips by forward kinematics over the standard
/// skeleton. Record i depends only on (seed, i, spec shape), so a spec with
/// more sequences extends a smaller one.
std::vector<SequenceRecord> synth_generate(const SynthSpec& spec);

/// Single clip of the given family; exposed for tests.
SequenceRecord synth_record(const SynthSpec& spec, int index, MotionFamily family);

/// Projects root-relative camera-frame 3D plus the stored root trajectory
/// through the record camera, returning normalized 2D.
pose::PoseSequence reproject(const SequenceRecord& record);

/// Prefixes of one generated pool with sizes base * multiplier.
std::vector<std::vector<SequenceRecord>> scaled_subsets(const SynthSpec& spec, int base,
                                                        const std::vector<int>& multipliers);

}  // namespace mpm::data
