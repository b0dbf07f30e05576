#include "mpm/train/batch.hpp"

#include "mpm/errors.hpp"
#include "mpm/net/model_state.hpp"
#include "mpm/pose/transforms.hpp"

namespace mpm::train {

namespace {

void put(nn::Matrix<double>& m, int sample, const pose::PoseSequence& seq, bool flip) {
  const pose::PoseSequence src = flip ? pose::horizontal_flip(seq) : seq;
  const double s = src.dim() == 3 ? 1.0 / net::kMillimetersPerModelUnit : 1.0;
  const auto data = src.data();
  double* dst = m.data() + static_cast<Eigen::Index>(sample) * src.frames() * m.cols();
  for (size_t i = 0; i < data.size(); ++i) dst[i] = data[i] * s;
}

}  // namespace

nn::Matrix<double> Batch::middle3d() const {
  if (!has_3d()) throw ValidationError("batch has no 3D poses");
  nn::Matrix<double> out(size, pose3d.cols());
  for (int b = 0; b < size; ++b) out.row(b) = pose3d.row(b * seq_len + seq_len / 2);
  return out;
}

Batch make_batch(const std::vector<data::Window>& windows, const std::vector<bool>& flips) {
  if (windows.empty()) throw ValidationError("make_batch: no windows");
  if (!flips.empty() && flips.size() != windows.size()) throw ValidationError("make_batch: flip flags mismatch");
  const data::Window& first = windows.front();
  const pose::PoseSequence& ref = first.pose2d ? *first.pose2d : *first.pose3d;
  Batch b;
  b.size = static_cast<int>(windows.size());
  b.seq_len = ref.frames();
  b.joints = ref.joints();
  const Eigen::Index rows = static_cast<Eigen::Index>(b.size) * b.seq_len;
  if (first.pose2d) b.pose2d.resize(rows, b.joints * 2);
  if (first.pose3d) b.pose3d.resize(rows, b.joints * 3);
  for (int i = 0; i < b.size; ++i) {
    const data::Window& w = windows[i];
    if (w.pose2d.has_value() != first.pose2d.has_value() || w.pose3d.has_value() != first.pose3d.has_value()) {
      throw ValidationError("make_batch: windows disagree in modalities");
    }
    const bool flip = !flips.empty() && flips[i];
    for (const auto* seq : {w.pose2d ? &*w.pose2d : nullptr, w.pose3d ? &*w.pose3d : nullptr}) {
      if (!seq) continue;
      if (seq->frames() != b.seq_len || seq->joints() != b.joints) {
        throw ValidationError("make_batch: windows disagree in shape");
      }
      put(seq->dim() == 2 ? b.pose2d : b.pose3d, i, *seq, flip);
    }
  }
  return b;
}

std::vector<size_t> eligible_records(const std::vector<data::SequenceRecord>& records, Requirement need) {
  std::vector<size_t> out;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const bool ok = need == Requirement::k2D ? r.has_2d() : need == Requirement::k3D ? r.has_3d() : r.paired();
    if (ok && r.frames() > 0) out.push_back(i);
  }
  return out;
}

Batch sample_batch(const std::vector<data::SequenceRecord>& records, const std::vector<size_t>& eligible,
                   Requirement need, int batch_size, int seq_len, double flip_prob, std::mt19937_64& rng) {
  if (eligible.empty()) throw ValidationError("sample_batch: no eligible records");
  std::uniform_int_distribution<size_t> pick(0, eligible.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<data::Window> windows;
  std::vector<bool> flips;
  windows.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const size_t r = eligible[pick(rng)];
    std::uniform_int_distribution<int> center(0, records[r].frames() - 1);
    data::Window w = data::window_at(records[r], static_cast<int>(r), seq_len, center(rng));
    if (need == Requirement::k2D) w.pose3d.reset();
    if (need == Requirement::k3D) w.pose2d.reset();
    windows.push_back(std::move(w));
    flips.push_back(coin(rng) < flip_prob);
  }
  return make_batch(windows, flips);
}

}  // namespace mpm::train
