#pragma once

#include <string>
#include <vector>

#include "mpm/data/record.hpp"
#include "mpm/net/model_config.hpp"
#include "mpm/train/train_plan.hpp"

namespace mpm::infer {

struct GridSpec {
  std::vector<int> rs{5};
  std::vector<double> rt{0.6};
  net::ModelConfig config = net::ModelConfig::toy(27);
  /// Brief Stage-I run per cell; its mask policy is overridden by the cell.
  train::TrainPlan pretrain = train::TrainPlan::pretrain();
  /// Brief Stage-II run per cell; 0 epochs scores the pretrained model on
  /// masked lifting instead.
  train::TrainPlan finetune = train::TrainPlan::finetune();
  std::uint64_t seed = 0;
};

struct GridCell {
  int rs = 0;
  double rt = 0.0;
  double val_mpjpe_mm = 0.0;
};

/// Trains one model per (r_s, r_t) cell and records its validation MPJPE, row-major over rs.
std::vector<GridCell> ratio_grid(const GridSpec& spec, const std::vector<data::SequenceRecord>& train,
                                 const std::vector<data::SequenceRecord>& val);

/// Table with one row per r_s and one column per r_t; the corner cell is "r_s\r_t".
std::string grid_csv(const std::vector<GridCell>& cells, const std::vector<int>& rs, const std::vector<double>& rt);

}  // namespace mpm::infer
