#include "mpm/train/losses.hpp"

#include "mpm/errors.hpp"

namespace mpm::train {

using net::Modality;

std::string to_string(Task t) {
  switch (t) {
    case Task::kM2M: return "m2m";
    case Task::kM3M: return "m3m";
    case Task::kM2L: return "m2l";
  }
  return "?";
}

double task_weight(Task t, const LossWeights& w) {
  switch (t) {
    case Task::kM2M: return w.m2m;
    case Task::kM3M: return w.m3m;
    case Task::kM2L: return w.m2l;
  }
  return 0.0;
}

template <typename T>
nn::Var pretext_loss(net::MpmNet<T>& model, nn::Tape<T>& tape, Task task, const Batch& batch,
                     const net::BatchMask& mask, const net::ForwardContext& ctx) {
  const bool needs_2d = task != Task::kM3M;
  const bool needs_3d = task != Task::kM2M;
  if (needs_2d && !batch.has_2d()) throw ValidationError(to_string(task) + " requires 2D poses in the batch");
  if (needs_3d && !batch.has_3d()) {
    throw ValidationError(task == Task::kM2L ? "m2l requires paired 2D-3D data" : "m3m requires 3D poses in the batch");
  }
  const Modality in = task == Task::kM3M ? Modality::k3D : Modality::k2D;
  const Modality out = task == Task::kM2M ? Modality::k2D : Modality::k3D;
  const nn::Matrix<T> input = (in == Modality::k2D ? batch.pose2d : batch.pose3d).template cast<T>();
  const nn::Matrix<T> target = (out == Modality::k2D ? batch.pose2d : batch.pose3d).template cast<T>();
  const nn::Var pred = model.reconstruct(tape, input, in, out, &mask, ctx);
  return tape.mean_squared_distance(pred, target, net::point_dim(out));
}

template <typename T>
FinetuneLoss<T> finetune_loss(net::MpmNet<T>& model, nn::Tape<T>& tape, const Batch& batch,
                              const LossWeights& weights, const net::ForwardContext& ctx) {
  if (!batch.has_2d() || !batch.has_3d()) throw ValidationError("fine-tuning requires paired 2D-3D data");
  const nn::Matrix<T> input = batch.pose2d.template cast<T>();
  const net::FinetuneOutputs out = model.finetune(tape, input, nullptr, ctx);
  FinetuneLoss<T> loss;
  loss.middle = tape.mean_squared_distance(out.middle, batch.middle3d().template cast<T>(), 3);
  loss.sequence = tape.mean_squared_distance(out.sequence, batch.pose3d.template cast<T>(), 3);
  loss.total = tape.add(tape.scale(loss.middle, static_cast<T>(weights.ft)),
                        tape.scale(loss.sequence, static_cast<T>(weights.ft_seq)));
  return loss;
}

template nn::Var pretext_loss<float>(net::MpmNet<float>&, nn::Tape<float>&, Task, const Batch&,
                                     const net::BatchMask&, const net::ForwardContext&);
template nn::Var pretext_loss<double>(net::MpmNet<double>&, nn::Tape<double>&, Task, const Batch&,
                                      const net::BatchMask&, const net::ForwardContext&);
template FinetuneLoss<float> finetune_loss<float>(net::MpmNet<float>&, nn::Tape<float>&, const Batch&,
                                                  const LossWeights&, const net::ForwardContext&);
template FinetuneLoss<double> finetune_loss<double>(net::MpmNet<double>&, nn::Tape<double>&, const Batch&,
                                                    const LossWeights&, const net::ForwardContext&);

}  // namespace mpm::train
