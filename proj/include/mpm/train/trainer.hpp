#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mpm/data/record.hpp"
#include "mpm/net/mpm_net.hpp"
#include "mpm/nn/adam.hpp"
#include "mpm/train/batch.hpp"
#include "mpm/train/losses.hpp"
#include "mpm/train/train_log.hpp"
#include "mpm/train/train_plan.hpp"

namespace mpm::train {

struct StepResult {
  std::string task;
  /// Unweighted task loss (Stage I) or the unweighted middle-frame term (Stage II).
  double raw = 0.0;
  /// Loss that was back-propagated.
  double weighted = 0.0;
  /// Stage II only: unweighted full-sequence term.
  double sequence = 0.0;
};

/// Runs Stage-I pretext training or Stage-II fine-tuning on a ModelState with
/// Adam. All randomness (batches, masks, flips, dropout, dataset choice) is
/// derived from plan.seed.
class Trainer {
 public:
  using EpochCallback = std::function<void(const EpochLog&)>;

  Trainer(net::ModelState<float>& state, TrainPlan plan);

  const TrainPlan& plan() const { return plan_; }
  long long steps() const { return step_; }
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  /// One Stage-I update running the task due at the current step.
  StepResult pretrain_step(const Batch& batch);
  /// One Stage-I update running the given task; the step counter still advances.
  StepResult pretrain_step(const Batch& batch, Task task);
  /// One Stage-II update.
  StepResult finetune_step(const Batch& batch);

  /// Full training over the plan's epochs. datasets are mixed per batch by
  /// plan.mix_weights; val may be empty.
  TrainLog run(const std::vector<std::vector<data::SequenceRecord>>& datasets,
               const std::vector<data::SequenceRecord>& val, const EpochCallback& on_epoch = {});

 private:
  void apply(nn::Tape<float>& tape, nn::Var loss, const std::string& what);

  net::ModelState<float>& state_;
  net::MpmNet<float> model_;
  TrainPlan plan_;
  nn::Adam<float> adam_;
  std::mt19937_64 data_rng_;
  std::mt19937_64 mask_rng_;
  std::mt19937_64 dropout_rng_;
  long long step_ = 0;
  double lr_;
};

}  // namespace mpm::train
