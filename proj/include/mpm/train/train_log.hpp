#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mpm::train {

struct EpochLog {
  int epoch = 0;
  /// Mean weighted step loss.
  double loss = 0.0;
  /// Mean unweighted loss per task name, in execution order.
  std::vector<std::pair<std::string, double>> tasks;
  double lr = 0.0;
  std::optional<double> val_mpjpe_mm;
};

/// Per-epoch training record. Wall time is kept apart from the rows so that
/// identically seeded runs produce identical rows.
class TrainLog {
 public:
  /// Throws ValidationError unless epochs arrive contiguously from 0.
  void append(EpochLog e);
  const std::vector<EpochLog>& epochs() const { return epochs_; }
  bool empty() const { return epochs_.empty(); }

  double wall_seconds = 0.0;

  /// Rows (epoch, task, loss, lr, val_mpjpe_mm); task "total" carries the
  /// weighted loss. A "# wall_seconds=..." comment precedes the column header
  /// when with_timing is set.
  std::string csv(bool with_timing = true) const;
  /// One JSON object per row; the first line is a header object holding wall time.
  std::string jsonl(bool with_timing = true) const;

  void write_csv(const std::filesystem::path& path) const;
  void write_jsonl(const std::filesystem::path& path) const;
  /// Parses csv() output; comment lines are skipped.
  static TrainLog read_csv(const std::filesystem::path& path);

 private:
  std::vector<EpochLog> epochs_;
};

}  // namespace mpm::train
