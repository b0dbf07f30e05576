#include "mpm/train/mix_sampler.hpp"

#include <cmath>
#include <numeric>

#include "mpm/errors.hpp"
#include "mpm/log.hpp"

namespace mpm::train {

MixSampler::MixSampler(const std::vector<size_t>& dataset_sizes, std::vector<double> weights, std::uint64_t seed)
    : rng_(seed) {
  if (dataset_sizes.empty()) throw ValidationError("mix: at least one dataset is required");
  if (weights.empty()) weights.assign(dataset_sizes.size(), 1.0);
  if (weights.size() != dataset_sizes.size()) {
    throw ValidationError("mix: " + std::to_string(weights.size()) + " weights for " +
                          std::to_string(dataset_sizes.size()) + " datasets");
  }
  for (size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ValidationError("mix: weights must be nonnegative");
    if (dataset_sizes[i] == 0 && weights[i] > 0.0) {
      warn("mix: dataset " + std::to_string(i) + " is empty; skipped and weights renormalized");
      weights[i] = 0.0;
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("mix: no dataset with positive weight and data");
  probs_.resize(weights.size());
  for (size_t i = 0; i < weights.size(); ++i) probs_[i] = weights[i] / total;
  dist_ = std::discrete_distribution<size_t>(weights.begin(), weights.end());
}

size_t MixSampler::next() { return dist_(rng_); }

}  // namespace mpm::train
