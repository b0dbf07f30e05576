#include "mpm/data/window.hpp"

#include <algorithm>

#include "mpm/errors.hpp"
#include "mpm/log.hpp"

namespace mpm::data {

pose::PoseSequence padded_window(const pose::PoseSequence& seq, int length, int center) {
  if (length < 1) throw ValidationError("window length must be positive");
  if (seq.frames() < 1) throw ValidationError("cannot window an empty sequence");
  pose::PoseSequence out(length, seq.joints(), seq.dim(), seq.fps());
  const int first = center - length / 2;
  const size_t stride = static_cast<size_t>(seq.joints()) * seq.dim();
  for (int i = 0; i < length; ++i) {
    const int src = std::clamp(first + i, 0, seq.frames() - 1);
    const auto f = seq.frame(src);
    std::copy(f.begin(), f.end(), out.data().begin() + i * stride);
  }
  return out;
}

Window window_at(const SequenceRecord& record, int record_index, int length, int center) {
  if (center < 0 || center >= record.frames()) throw ValidationError("window center out of range");
  Window w;
  w.record = record_index;
  w.source_frame = center;
  w.middle = length / 2;
  if (record.pose2d) w.pose2d = padded_window(*record.pose2d, length, center);
  if (record.pose3d) w.pose3d = padded_window(*record.pose3d, length, center);
  return w;
}

std::vector<Window> window(const SequenceRecord& record, int record_index, const WindowOptions& options) {
  if (options.length < 1 || options.stride < 1) throw ValidationError("window: length and stride must be positive");
  const int n = record.frames();
  std::vector<Window> out;
  if (options.pad) {
    for (int c = 0; c < n; c += options.stride) out.push_back(window_at(record, record_index, options.length, c));
    if (options.tail == TailPolicy::kAlignEnd && n > 0 && (n - 1) % options.stride != 0) {
      out.push_back(window_at(record, record_index, options.length, n - 1));
    }
    return out;
  }
  if (n < options.length) {
    warn("record '" + record.id + "' has " + std::to_string(n) + " frames, shorter than window " +
         std::to_string(options.length) + "; skipped");
    return out;
  }
  const int half = options.length / 2;
  int last_start = -1;
  for (int s = 0; s + options.length <= n; s += options.stride) {
    out.push_back(window_at(record, record_index, options.length, s + half));
    last_start = s;
  }
  if (options.tail == TailPolicy::kAlignEnd && last_start + options.length < n) {
    out.push_back(window_at(record, record_index, options.length, n - options.length + half));
  }
  return out;
}

}  // namespace mpm::data
