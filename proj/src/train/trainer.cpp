#include "mpm/train/trainer.hpp"

#include <chrono>
#include <cmath>

#include "mpm/data/split.hpp"
#include "mpm/errors.hpp"
#include "mpm/train/evaluation.hpp"
#include "mpm/train/mix_sampler.hpp"

namespace mpm::train {

Trainer::Trainer(net::ModelState<float>& state, TrainPlan plan)
    : state_(state),
      model_(state),
      plan_(std::move(plan)),
      adam_(nn::AdamOptions{0.9, 0.999, 1e-8, plan_.l2}),
      data_rng_(plan_.seed),
      mask_rng_(plan_.seed ^ 0x6d61736bULL),
      dropout_rng_(plan_.seed ^ 0x64726f70ULL),
      lr_(plan_.lr0) {
  plan_.validate();
  plan_.mask_policy.validate(state_.config.joints);
}

void Trainer::apply(nn::Tape<float>& tape, nn::Var loss, const std::string& what) {
  const float value = tape.scalar(loss);
  if (!std::isfinite(value)) {
    throw NumericError("non-finite " + what + " loss at step " + std::to_string(step_));
  }
  state_.params.zero_grad();
  tape.backward(loss);
  if (!state_.params.all_finite()) {
    throw NumericError("non-finite gradient in " + what + " step " + std::to_string(step_));
  }
  adam_.step(state_.params, lr_);
}

StepResult Trainer::pretrain_step(const Batch& batch) { return pretrain_step(batch, task_for_step(step_)); }

StepResult Trainer::pretrain_step(const Batch& batch, Task task) {
  if (plan_.stage != Stage::kPretrain) throw ValidationError("pretrain_step on a fine-tuning plan");
  const int J = state_.config.joints;
  std::vector<mask::JointMask> masks;
  masks.reserve(batch.size);
  for (int b = 0; b < batch.size; ++b) masks.push_back(mask::sample_mask(plan_.mask_policy, batch.seq_len, J, mask_rng_));
  const net::BatchMask bm = net::BatchMask::from_masks(masks);

  nn::Tape<float> tape;
  const net::ForwardContext ctx{true, &dropout_rng_, true};
  const nn::Var raw = pretext_loss(model_, tape, task, batch, bm, ctx);
  const nn::Var weighted = tape.scale(raw, static_cast<float>(task_weight(task, plan_.weights)));
  StepResult r{to_string(task), tape.scalar(raw), tape.scalar(weighted), 0.0};
  apply(tape, weighted, r.task);
  ++step_;
  return r;
}

StepResult Trainer::finetune_step(const Batch& batch) {
  if (plan_.stage != Stage::kFinetune) throw ValidationError("finetune_step on a pretraining plan");
  nn::Tape<float> tape;
  const net::ForwardContext ctx{true, &dropout_rng_, true};
  const FinetuneLoss<float> loss = finetune_loss(model_, tape, batch, plan_.weights, ctx);
  StepResult r{"ft", tape.scalar(loss.middle), tape.scalar(loss.total), tape.scalar(loss.sequence)};
  apply(tape, loss.total, "fine-tuning");
  ++step_;
  return r;
}

TrainLog Trainer::run(const std::vector<std::vector<data::SequenceRecord>>& datasets,
                      const std::vector<data::SequenceRecord>& val, const EpochCallback& on_epoch) {
  if (datasets.empty()) throw ValidationError("train: no datasets");
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<std::vector<data::SequenceRecord>> train;
  const bool few_shot = plan_.data_fraction < 1.0 || !plan_.subjects.empty();
  for (size_t i = 0; i < datasets.size(); ++i) {
    train.push_back(few_shot ? data::few_shot_subset(datasets[i], plan_.data_fraction, plan_.subjects, plan_.seed + i)
                             : datasets[i]);
  }

  const bool stage_one = plan_.stage == Stage::kPretrain;
  // Eligible record indices per dataset, per requirement.
  std::vector<std::vector<size_t>> only2d, only3d, paired;
  std::vector<size_t> sizes;
  size_t total = 0;
  for (const auto& d : train) {
    only2d.push_back(eligible_records(d, Requirement::k2D));
    only3d.push_back(eligible_records(d, Requirement::k3D));
    paired.push_back(eligible_records(d, Requirement::kPaired));
    const size_t n = stage_one ? d.size() : paired.back().size();
    sizes.push_back(n);
    total += n;
  }
  MixSampler mix(sizes, plan_.mix_weights, plan_.seed ^ 0x6d6978ULL);
  const int steps = plan_.steps_per_epoch > 0
                        ? plan_.steps_per_epoch
                        : static_cast<int>((total + plan_.batch_size - 1) / plan_.batch_size);
  if (steps < 1) throw ValidationError("train: no training records");

  const int L = state_.config.seq_len;
  TrainLog log;
  for (int epoch = 0; epoch < plan_.epochs; ++epoch) {
    lr_ = lr_at(epoch, plan_);
    double sum = 0.0;
    std::vector<std::pair<std::string, double>> task_sum;
    std::vector<int> task_count;
    for (const char* name : stage_one ? std::vector<const char*>{"m2m", "m3m", "m2l"}
                                      : std::vector<const char*>{"ft", "ft_seq"}) {
      task_sum.emplace_back(name, 0.0);
      task_count.push_back(0);
    }
    auto record_task = [&](const std::string& name, double v) {
      for (size_t i = 0; i < task_sum.size(); ++i) {
        if (task_sum[i].first == name) {
          task_sum[i].second += v;
          ++task_count[i];
          return;
        }
      }
      task_sum.emplace_back(name, v);
      task_count.push_back(1);
    };

    for (int s = 0; s < steps; ++s) {
      const size_t d = mix.next();
      if (stage_one) {
        const Task task = task_for_step(step_);
        const Requirement need = task == Task::kM2M ? Requirement::k2D
                                 : task == Task::kM3M ? Requirement::k3D
                                                      : Requirement::kPaired;
        const auto& pool = need == Requirement::k2D ? only2d[d] : need == Requirement::k3D ? only3d[d] : paired[d];
        if (pool.empty()) {
          throw ValidationError(task == Task::kM2L ? "m2l requires paired 2D-3D data in dataset " + std::to_string(d)
                                                   : to_string(task) + ": dataset " + std::to_string(d) +
                                                         " lacks the required modality");
        }
        const Batch batch = sample_batch(train[d], pool, need, plan_.batch_size, L, plan_.flip_prob, data_rng_);
        const StepResult r = pretrain_step(batch, task);
        sum += r.weighted;
        record_task(r.task, r.raw);
      } else {
        const Batch batch =
            sample_batch(train[d], paired[d], Requirement::kPaired, plan_.batch_size, L, plan_.flip_prob, data_rng_);
        const StepResult r = finetune_step(batch);
        sum += r.weighted;
        record_task("ft", r.raw);
        record_task("ft_seq", r.sequence);
      }
    }

    EpochLog e;
    e.epoch = epoch;
    e.loss = sum / steps;
    e.lr = lr_;
    for (size_t i = 0; i < task_sum.size(); ++i) {
      if (task_count[i] > 0) e.tasks.emplace_back(task_sum[i].first, task_sum[i].second / task_count[i]);
    }
    const bool validate_now = plan_.val_every > 0 && !val.empty() &&
                              ((epoch + 1) % plan_.val_every == 0 || epoch + 1 == plan_.epochs);
    if (validate_now) {
      // Stage I is scored on masked input, the setting its decoders are trained for.
      if (stage_one) {
        e.val_mpjpe_mm = validation_mpjpe(model_, val, net::DecodeStage::kPretrain, plan_.val_max_records,
                                          &plan_.mask_policy);
      } else {
        e.val_mpjpe_mm = validation_mpjpe(model_, val, net::DecodeStage::kFinetune, plan_.val_max_records);
      }
    }
    log.append(e);
    if (on_epoch) on_epoch(log.epochs().back());
  }
  if (!stage_one) state_.stage = net::StateStage::kFinetuned;
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace mpm::train
