#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ppgbp/nn/tensor.hpp"

namespace ppgbp::nn {

/// Glorot/Xavier uniform: U(-sqrt(6 / (fan_in + fan_out)), +sqrt(...)).
template <typename T>
Tensor<T> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `values` in place. `step` is the 1-based
/// index of this update.
template <typename T>
void adam_update(std::span<T> values, std::span<const T> grads, std::span<T> m, std::span<T> v,
                 std::uint64_t step, const AdamOptions& options);

template <typename T>
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update to every parameter and zeroes the gradients.
  void step(std::span<Parameter<T>* const> params);

  const AdamOptions& options() const { return options_; }
  AdamOptions& options() { return options_; }
  std::uint64_t step_count() const { return step_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }
  void restore(std::uint64_t step, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v);
  void reset();

 private:
  AdamOptions options_;
  std::uint64_t step_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace ppgbp::nn
