#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "mpm/data/record.hpp"

namespace mpm::data {

struct SubjectSplit {
  std::set<int> train{1, 2, 3, 4, 5};
  std::set<int> val{6, 7};
};

struct SplitRecords {
  std::vector<SequenceRecord> train;
  std::vector<SequenceRecord> val;
};

/// Throws ValidationError when the subject sets overlap.
void require_disjoint(const SubjectSplit& split);

/// Partitions by subject; records of other subjects are dropped.
SplitRecords split_by_subject(const std::vector<SequenceRecord>& records, const SubjectSplit& split = {});

/// Few-shot subset: keeps records of the listed subjects (all when empty),
/// then a deterministic fraction of them (at least one record when any remain).
std::vector<SequenceRecord> few_shot_subset(const std::vector<SequenceRecord>& records, double fraction,
                                            const std::set<int>& subjects, std::uint64_t seed);

}  // namespace mpm::data
