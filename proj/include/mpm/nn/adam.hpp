#pragma once

#include <cstdint>
#include <vector>

#include "mpm/nn/parameters.hpp"

namespace mpm::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// L2 penalty folded into the gradient; 0 disables it.
  double l2 = 0.0;
};

/// Adaptive moment estimation with bias correction. Moment buffers are keyed
/// by parameter position, so the store layout must not change between steps.
template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  void step(ParameterStore<T>& params, double lr);

  std::int64_t steps() const { return steps_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::int64_t steps_ = 0;
  std::vector<Matrix<T>> m_;
  std::vector<Matrix<T>> v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace mpm::nn
