#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpm/mask/mask_sampler.hpp"

namespace mpm::train {

enum class Stage { kPretrain = 1, kFinetune = 2 };

struct LossWeights {
  double m2m = 5.0;
  double m3m = 2.0;
  double m2l = 1.0;
  double ft = 2.0;
  double ft_seq = 1.0;
};

struct TrainPlan {
  Stage stage = Stage::kPretrain;
  int epochs = 50;
  int batch_size = 64;
  /// 0 derives the count from the data: ceil(total records / batch_size).
  int steps_per_epoch = 0;
  double lr0 = 1e-3;
  double lr_decay = 0.98;
  double l2 = 0.0;
  LossWeights weights;
  /// One weight per training dataset; empty means equal weights.
  std::vector<double> mix_weights;
  mask::MaskPolicy mask_policy;
  double flip_prob = 0.5;
  double data_fraction = 1.0;
  /// Few-shot subject filter; empty keeps every subject.
  std::set<int> subjects;
  /// Validate every n epochs (0 disables) on at most val_max_records records (0 = all).
  int val_every = 1;
  int val_max_records = 32;
  std::uint64_t seed = 0;

  static TrainPlan pretrain();
  static TrainPlan finetune();

  /// Throws ValidationError when an invariant is violated.
  void validate() const;
};

/// lr0 * lr_decay^epoch.
double lr_at(int epoch, const TrainPlan& plan);

void to_json(nlohmann::json& j, const TrainPlan& p);
/// Fields absent from j keep their current values, so a partial document
/// overrides a preset.
void update_from_json(const nlohmann::json& j, TrainPlan& p);

}  // namespace mpm::train
