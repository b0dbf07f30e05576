#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mpm::train {

/// Chooses the source dataset of each batch with probability proportional to
/// its weight. Datasets with no records are dropped with a warning and the
/// remaining weights renormalized.
class MixSampler {
 public:
  MixSampler(const std::vector<size_t>& dataset_sizes, std::vector<double> weights, std::uint64_t seed);

  size_t next();
  const std::vector<double>& probabilities() const { return probs_; }

 private:
  std::vector<double> probs_;
  std::mt19937_64 rng_;
  std::discrete_distribution<size_t> dist_;
};

}  // namespace mpm::train
