#pragma once

#include <string>

#include "mpm/net/mpm_net.hpp"
#include "mpm/train/batch.hpp"
#include "mpm/train/train_plan.hpp"

namespace mpm::train {

/// Stage-I pretext tasks, executed round-robin in this order.
enum class Task { kM2M = 0, kM3M = 1, kM2L = 2 };

std::string to_string(Task t);

/// Task run at a given Stage-I step: m2m, m3m, m2l, m2m, ...
inline Task task_for_step(long long step) { return static_cast<Task>(step % 3); }

double task_weight(Task t, const LossWeights& w);

/// Stage-I objective as the weighted sum of the three task losses.
inline double stage_one_total(double m2m, double m3m, double m2l, const LossWeights& w) {
  return w.m2m * m2m + w.m3m * m3m + w.m2l * m2l;
}

/// Unweighted pretext loss: masked input reconstructed (m2m, m3m) or lifted
/// (m2l) over the whole window and compared with the unmasked target by mean
/// squared point distance. Throws ValidationError when the batch lacks a
/// required modality.
template <typename T>
nn::Var pretext_loss(net::MpmNet<T>& model, nn::Tape<T>& tape, Task task, const Batch& batch,
                     const net::BatchMask& mask, const net::ForwardContext& ctx);

template <typename T>
struct FinetuneLoss {
  nn::Var total;     // weights.ft * middle + weights.ft_seq * sequence
  nn::Var middle;    // unweighted middle-frame term
  nn::Var sequence;  // unweighted full-sequence term
};

/// Stage-II loss on unmasked 2D input with 3D supervision.
template <typename T>
FinetuneLoss<T> finetune_loss(net::MpmNet<T>& model, nn::Tape<T>& tape, const Batch& batch,
                              const LossWeights& weights, const net::ForwardContext& ctx);

}  // namespace mpm::train
