#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mpm/errors.hpp"

namespace mpm::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
};

/// Named, insertion-ordered parameter tensors. Names are unique; the order is
/// the serialization and optimizer order.
template <typename T>
class ParameterStore {
 public:
  Parameter<T>& add(const std::string& name, Matrix<T> value) {
    if (index_.count(name)) throw ValidationError("duplicate parameter '" + name + "'");
    index_.emplace(name, params_.size());
    Matrix<T> grad = Matrix<T>::Zero(value.rows(), value.cols());
    params_.push_back(Parameter<T>{name, std::move(value), std::move(grad)});
    return params_.back();
  }

  bool contains(std::string_view name) const { return index_.count(std::string(name)) > 0; }

  Parameter<T>& get(std::string_view name) { return params_[lookup(name)]; }
  const Parameter<T>& get(std::string_view name) const { return params_[lookup(name)]; }

  std::vector<Parameter<T>>& all() { return params_; }
  const std::vector<Parameter<T>>& all() const { return params_; }
  size_t size() const { return params_.size(); }

  std::int64_t scalar_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
  }

  /// Scalar count over parameters whose name starts with prefix.
  std::int64_t scalar_count(std::string_view prefix) const {
    std::int64_t n = 0;
    for (const auto& p : params_) {
      if (std::string_view(p.name).starts_with(prefix)) n += p.value.size();
    }
    return n;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  bool all_finite() const {
    for (const auto& p : params_) {
      if (!p.value.allFinite()) return false;
    }
    return true;
  }

  template <typename U>
  ParameterStore<U> cast() const {
    ParameterStore<U> out;
    for (const auto& p : params_) out.add(p.name, p.value.template cast<U>());
    return out;
  }

 private:
  size_t lookup(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw ValidationError("unknown parameter '" + std::string(name) + "'");
    return it->second;
  }

  std::vector<Parameter<T>> params_;
  std::map<std::string, size_t> index_;
};

}  // namespace mpm::nn
