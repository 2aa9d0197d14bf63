#pragma once

#include <cstddef>
#include <span>

#include "ppgbp/nn/tensor.hpp"

namespace ppgbp::nn {

template <typename T>
struct LossResult {
  double loss = 0.0;  // mean over the batch
  Tensor<T> grad;     // d loss / d input
};

/// Row-wise softmax of [batch, classes] with max subtraction.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Mean cross-entropy of softmax(logits) against integer labels. Throws
/// ConfigError for a label outside [0, classes).
template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels);

/// Mean squared error for [batch, 1] predictions.
template <typename T>
LossResult<T> mean_squared_error(const Tensor<T>& pred, std::span<const double> targets);

}  // namespace ppgbp::nn
