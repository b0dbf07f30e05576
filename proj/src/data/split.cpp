#include "mpm/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mpm/errors.hpp"

namespace mpm::data {

void require_disjoint(const SubjectSplit& split) {
  for (int s : split.train) {
    if (split.val.count(s)) {
      throw ValidationError("train and validation subject sets overlap on subject " + std::to_string(s));
    }
  }
}

SplitRecords split_by_subject(const std::vector<SequenceRecord>& records, const SubjectSplit& split) {
  require_disjoint(split);
  SplitRecords out;
  for (const auto& r : records) {
    if (split.train.count(r.subject)) {
      out.train.push_back(r);
    } else if (split.val.count(r.subject)) {
      out.val.push_back(r);
    }
  }
  return out;
}

std::vector<SequenceRecord> few_shot_subset(const std::vector<SequenceRecord>& records, double fraction,
                                            const std::set<int>& subjects, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ValidationError("data fraction must lie in (0, 1]");
  std::vector<size_t> keep;
  for (size_t i = 0; i < records.size(); ++i) {
    if (subjects.empty() || subjects.count(records[i].subject)) keep.push_back(i);
  }
  if (keep.empty()) return {};
  const size_t n = std::max<size_t>(1, static_cast<size_t>(std::floor(fraction * keep.size() + 1e-9)));
  std::mt19937_64 rng(seed);
  for (size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<size_t> pick(i, keep.size() - 1);
    std::swap(keep[i], keep[pick(rng)]);
  }
  keep.resize(n);
  std::sort(keep.begin(), keep.end());
  std::vector<SequenceRecord> out;
  for (size_t i : keep) out.push_back(records[i]);
  return out;
}

}  // namespace mpm::data
