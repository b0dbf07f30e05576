#pragma once

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mpm/train/losses.hpp"

namespace gradcheck {

using Mat = mpm::nn::Matrix<double>;

/// Tiny double-precision model with a random paired batch and a spatiotemporal mask.
struct Fixture {
  mpm::net::ModelState<double> state = mpm::net::ModelState<double>::initialize(mpm::net::ModelConfig::tiny(), 21);
  mpm::train::Batch batch;
  mpm::net::BatchMask mask;

  Fixture() {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> n(0.0, 0.3);
    const auto& cfg = state.config;
    batch.size = 2;
    batch.seq_len = cfg.seq_len;
    batch.joints = cfg.joints;
    batch.pose2d = Mat(batch.size * cfg.seq_len, cfg.joints * 2);
    batch.pose3d = Mat(batch.size * cfg.seq_len, cfg.joints * 3);
    for (Eigen::Index i = 0; i < batch.pose2d.size(); ++i) batch.pose2d.data()[i] = n(rng);
    for (Eigen::Index i = 0; i < batch.pose3d.size(); ++i) batch.pose3d.data()[i] = n(rng);
    std::vector<mpm::mask::JointMask> masks;
    for (int b = 0; b < batch.size; ++b) {
      const mpm::mask::MaskPolicy p{mpm::mask::MaskStrategy::kSpatiotemporal, 5, 0.4, 30u + b};
      masks.push_back(mpm::mask::sample_mask(p, cfg.seq_len, cfg.joints));
    }
    mask = mpm::net::BatchMask::from_masks(masks);
  }
};

using LossFn = std::function<mpm::nn::Var(mpm::net::MpmNet<double>&, mpm::nn::Tape<double>&)>;

struct Result {
  double worst = 0.0;
  std::string worst_param;
  int groups = 0;
};

/// Per-tensor relative error ||g_num - g_ana|| / (||g_num|| + ||g_ana||) from
/// central differences, maximized over the tensors the loss depends on.
inline Result check(Fixture& fx, const LossFn& loss) {
  mpm::net::MpmNet<double> model(fx.state);
  auto eval = [&](bool record) {
    mpm::nn::Tape<double> tape(record);
    const mpm::nn::Var l = loss(model, tape);
    if (record) {
      fx.state.params.zero_grad();
      tape.backward(l);
    }
    return tape.scalar(l);
  };
  eval(true);
  std::vector<Mat> analytic;
  for (const auto& p : fx.state.params.all()) analytic.push_back(p.grad);

  const double h = 1e-5;
  Result r;
  auto& all = fx.state.params.all();
  for (size_t k = 0; k < all.size(); ++k) {
    auto& p = all[k];
    Mat numeric(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      const double keep = p.value.data()[i];
      p.value.data()[i] = keep + h;
      const double up = eval(false);
      p.value.data()[i] = keep - h;
      const double down = eval(false);
      p.value.data()[i] = keep;
      numeric.data()[i] = (up - down) / (2 * h);
    }
    const double scale = numeric.norm() + analytic[k].norm();
    if (scale < 1e-10) continue;
    ++r.groups;
    const double err = (numeric - analytic[k]).norm() / scale;
    if (err > r.worst) {
      r.worst = err;
      r.worst_param = p.name;
    }
  }
  return r;
}

/// The five training losses by name: m2m, m3m, m2l, ft, ft_seq.
inline LossFn loss_by_name(Fixture& fx, const std::string& name) {
  using namespace mpm::train;
  if (name == "ft" || name == "ft_seq") {
    return [&fx, name](auto& m, auto& t) {
      const auto l = finetune_loss<double>(m, t, fx.batch, LossWeights{}, {});
      return name == "ft" ? l.middle : l.sequence;
    };
  }
  const Task task = name == "m2m" ? Task::kM2M : name == "m3m" ? Task::kM3M : Task::kM2L;
  return [&fx, task](auto& m, auto& t) { return pretext_loss<double>(m, t, task, fx.batch, fx.mask, {}); };
}

inline const std::vector<std::string>& loss_names() {
  static const std::vector<std::string> names{"m2m", "m3m", "m2l", "ft", "ft_seq"};
  return names;
}

}  // namespace gradcheck
