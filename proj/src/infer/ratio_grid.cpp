#include "mpm/infer/ratio_grid.hpp"

#include <cstdio>
#include <sstream>

#include "mpm/errors.hpp"
#include "mpm/net/model_state.hpp"
#include "mpm/train/evaluation.hpp"
#include "mpm/train/trainer.hpp"

namespace mpm::infer {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::vector<GridCell> ratio_grid(const GridSpec& spec, const std::vector<data::SequenceRecord>& train,
                                 const std::vector<data::SequenceRecord>& val) {
  if (spec.rs.empty() || spec.rt.empty()) throw ValidationError("grid: r_s and r_t lists must be nonempty");
  if (val.empty()) throw ValidationError("grid: validation set is empty");
  std::vector<GridCell> cells;
  for (int rs : spec.rs) {
    for (double rt : spec.rt) {
      train::TrainPlan pre = spec.pretrain;
      pre.stage = train::Stage::kPretrain;
      pre.mask_policy.joints_per_frame = rs;
      pre.mask_policy.frame_ratio = rt;
      pre.seed = spec.seed;
      pre.val_every = 0;
      auto state = net::ModelState<float>::initialize(spec.config, spec.seed);
      train::Trainer(state, pre).run({train}, {});

      GridCell cell{rs, rt, 0.0};
      if (spec.finetune.epochs > 0) {
        train::TrainPlan ft = spec.finetune;
        ft.stage = train::Stage::kFinetune;
        ft.seed = spec.seed;
        ft.val_every = 0;
        auto tuned = net::transplant_pretrained(state, spec.config, spec.seed);
        train::Trainer(tuned, ft).run({train}, {});
        net::MpmNet<float> model(tuned);
        cell.val_mpjpe_mm = train::validation_mpjpe(model, val, net::DecodeStage::kFinetune);
      } else {
        net::MpmNet<float> model(state);
        cell.val_mpjpe_mm = train::validation_mpjpe(model, val, net::DecodeStage::kPretrain, 0, &pre.mask_policy);
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string grid_csv(const std::vector<GridCell>& cells, const std::vector<int>& rs, const std::vector<double>& rt) {
  if (cells.size() != rs.size() * rt.size()) throw ValidationError("grid: cell count does not match the axes");
  std::ostringstream out;
  out << "r_s\\r_t";
  for (double t : rt) out << ',' << num(t);
  out << '\n';
  for (size_t i = 0; i < rs.size(); ++i) {
    out << rs[i];
    for (size_t k = 0; k < rt.size(); ++k) out << ',' << num(cells[i * rt.size() + k].val_mpjpe_mm);
    out << '\n';
  }
  return out.str();
}

}  // namespace mpm::infer
