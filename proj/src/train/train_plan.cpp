#include "mpm/train/train_plan.hpp"

#include <cmath>

#include "mpm/errors.hpp"

namespace mpm::train {

using nlohmann::json;

TrainPlan TrainPlan::pretrain() { return TrainPlan{}; }

TrainPlan TrainPlan::finetune() {
  TrainPlan p;
  p.stage = Stage::kFinetune;
  p.lr0 = 7e-4;
  return p;
}

void TrainPlan::validate() const {
  if (epochs < 0) throw ValidationError("plan: epochs must be nonnegative");
  if (batch_size < 1) throw ValidationError("plan: batch_size must be positive");
  if (steps_per_epoch < 0) throw ValidationError("plan: steps_per_epoch must be nonnegative");
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw ValidationError("plan: lr0 must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ValidationError("plan: lr_decay must lie in (0, 1]");
  if (!(l2 >= 0.0)) throw ValidationError("plan: l2 must be nonnegative");
  for (double w : {weights.m2m, weights.m3m, weights.m2l, weights.ft, weights.ft_seq}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("plan: loss weights must be finite and nonnegative");
  }
  for (double w : mix_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("plan: mix weights must be finite and nonnegative");
  }
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) throw ValidationError("plan: data_fraction must lie in (0, 1]");
  if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) throw ValidationError("plan: flip_prob must lie in [0, 1]");
  if (val_every < 0 || val_max_records < 0) throw ValidationError("plan: validation settings must be nonnegative");
}

double lr_at(int epoch, const TrainPlan& plan) {
  if (epoch < 0) throw ValidationError("lr_at: epoch must be nonnegative");
  return plan.lr0 * std::pow(plan.lr_decay, epoch);
}

void to_json(json& j, const TrainPlan& p) {
  j = json{{"stage", static_cast<int>(p.stage)},
           {"epochs", p.epochs},
           {"batch_size", p.batch_size},
           {"steps_per_epoch", p.steps_per_epoch},
           {"lr0", p.lr0},
           {"lr_decay", p.lr_decay},
           {"l2", p.l2},
           {"weights",
            {{"m2m", p.weights.m2m},
             {"m3m", p.weights.m3m},
             {"m2l", p.weights.m2l},
             {"ft", p.weights.ft},
             {"ft_seq", p.weights.ft_seq}}},
           {"mix_weights", p.mix_weights},
           {"mask",
            {{"strategy", mask::to_string(p.mask_policy.strategy)},
             {"rs", p.mask_policy.joints_per_frame},
             {"rt", p.mask_policy.frame_ratio}}},
           {"flip_prob", p.flip_prob},
           {"data_fraction", p.data_fraction},
           {"subjects", p.subjects},
           {"val_every", p.val_every},
           {"val_max_records", p.val_max_records},
           {"seed", p.seed}};
}

void update_from_json(const json& j, TrainPlan& p) {
  try {
    if (j.contains("stage")) {
      const int s = j["stage"].get<int>();
      if (s != 1 && s != 2) throw ValidationError("plan: stage must be 1 or 2");
      p.stage = static_cast<Stage>(s);
    }
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("epochs", p.epochs);
    get("batch_size", p.batch_size);
    get("steps_per_epoch", p.steps_per_epoch);
    get("lr0", p.lr0);
    get("lr_decay", p.lr_decay);
    get("l2", p.l2);
    get("mix_weights", p.mix_weights);
    get("flip_prob", p.flip_prob);
    get("data_fraction", p.data_fraction);
    get("subjects", p.subjects);
    get("val_every", p.val_every);
    get("val_max_records", p.val_max_records);
    get("seed", p.seed);
    if (j.contains("weights")) {
      const json& w = j["weights"];
      p.weights.m2m = w.value("m2m", p.weights.m2m);
      p.weights.m3m = w.value("m3m", p.weights.m3m);
      p.weights.m2l = w.value("m2l", p.weights.m2l);
      p.weights.ft = w.value("ft", p.weights.ft);
      p.weights.ft_seq = w.value("ft_seq", p.weights.ft_seq);
    }
    if (j.contains("mask")) {
      const json& m = j["mask"];
      if (m.contains("strategy")) p.mask_policy.strategy = mask::parse_strategy(m["strategy"].get<std::string>());
      p.mask_policy.joints_per_frame = m.value("rs", p.mask_policy.joints_per_frame);
      p.mask_policy.frame_ratio = m.value("rt", p.mask_policy.frame_ratio);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
}

}  // namespace mpm::train
