#include "mpm/nn/adam.hpp"

#include <cmath>

namespace mpm::nn {

template <typename T>
void Adam<T>::step(ParameterStore<T>& params, double lr) {
  auto& all = params.all();
  if (m_.empty()) {
    for (const auto& p : all) {
      m_.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
      v_.push_back(Matrix<T>::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (m_.size() != all.size()) throw ValidationError("adam: parameter layout changed");

  ++steps_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  const T b1 = static_cast<T>(options_.beta1);
  const T b2 = static_cast<T>(options_.beta2);
  const T step_size = static_cast<T>(lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(options_.eps);
  const T l2 = static_cast<T>(options_.l2);

  for (size_t i = 0; i < all.size(); ++i) {
    auto& p = all[i];
    Matrix<T> g = p.grad;
    if (options_.l2 > 0.0) g += l2 * p.value;
    m_[i] = b1 * m_[i] + (T(1) - b1) * g;
    v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseAbs2();
    p.value.array() -= step_size * m_[i].array() / ((v_[i].array().sqrt() * inv_sqrt_bc2) + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace mpm::nn
