#pragma once

#include <optional>
#include <vector>

#include "mpm/data/record.hpp"

namespace mpm::data {

enum class TailPolicy {
  kDrop,      // trailing frames that do not fill a window are skipped
  kAlignEnd,  // one extra window ending at the last frame
};

struct WindowOptions {
  int length = 243;
  int stride = 1;
  /// Replicate boundary frames so every frame (at the given stride) can be a middle frame.
  bool pad = false;
  TailPolicy tail = TailPolicy::kDrop;
};

/// A fixed-length clip cut from a record. middle is the index within the
/// window of the supervised frame; source_frame is that frame's index in
/// the record.
struct Window {
  int record = -1;
  int source_frame = 0;
  int middle = 0;
  std::optional<pose::PoseSequence> pose2d;
  std::optional<pose::PoseSequence> pose3d;
};

/// Frames [center - length/2, center - length/2 + length) with indices
/// clamped to the sequence (edge replication).
pose::PoseSequence padded_window(const pose::PoseSequence& seq, int length, int center);

/// Window of a record centered on frame center, padded as needed.
Window window_at(const SequenceRecord& record, int record_index, int length, int center);

/// Sliding windows over one record. Without padding, windows start at
/// 0, stride, 2*stride, ... and records shorter than length are skipped with a
/// warning. With padding, window centers are 0, stride, 2*stride, ...
std::vector<Window> window(const SequenceRecord& record, int record_index, const WindowOptions& options);

}  // namespace mpm::data
