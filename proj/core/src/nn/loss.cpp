#include "ppgbp/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "ppgbp/common/error.hpp"

namespace ppgbp::nn {

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw StructuralError("softmax: expected [batch, classes]");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  Tensor<T> p(logits.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    const T* z = logits.data() + b * classes;
    const double mx = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - mx);
    for (std::size_t c = 0; c < classes; ++c) p[b * classes + c] = static_cast<T>(std::exp(z[c] - mx) / sum);
  }
  return p;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size())
    throw StructuralError("cross-entropy: logits " + shape_string(logits.shape()) + " vs " +
                          std::to_string(labels.size()) + " labels");
  const std::size_t batch = logits.dim(0), classes = logits.dim(1);
  LossResult<T> out{0.0, Tensor<T>(logits.shape())};
  for (std::size_t b = 0; b < batch; ++b) {
    if (labels[b] >= classes)
      throw ConfigError("cross-entropy: label " + std::to_string(labels[b]) + " outside [0, " +
                        std::to_string(classes) + ")");
    const T* z = logits.data() + b * classes;
    const double mx = *std::max_element(z, z + classes);
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) sum += std::exp(z[c] - mx);
    const double log_sum = std::log(sum);
    out.loss += -(z[labels[b]] - mx - log_sum);
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = std::exp(z[c] - mx - log_sum);
      out.grad[b * classes + c] = static_cast<T>((p - (c == labels[b] ? 1.0 : 0.0)) / static_cast<double>(batch));
    }
  }
  out.loss /= static_cast<double>(batch);
  return out;
}

template <typename T>
LossResult<T> mean_squared_error(const Tensor<T>& pred, std::span<const double> targets) {
  if (pred.size() != targets.size() || pred.rank() != 2 || pred.dim(1) != 1)
    throw StructuralError("mse: predictions " + shape_string(pred.shape()) + " vs " +
                          std::to_string(targets.size()) + " targets");
  const std::size_t batch = pred.dim(0);
  LossResult<T> out{0.0, Tensor<T>(pred.shape())};
  for (std::size_t b = 0; b < batch; ++b) {
    const double d = static_cast<double>(pred[b]) - targets[b];
    out.loss += d * d;
    out.grad[b] = static_cast<T>(2.0 * d / static_cast<double>(batch));
  }
  out.loss /= static_cast<double>(batch);
  return out;
}

template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template LossResult<float> softmax_cross_entropy(const Tensor<float>&, std::span<const std::size_t>);
template LossResult<double> softmax_cross_entropy(const Tensor<double>&, std::span<const std::size_t>);
template LossResult<float> mean_squared_error(const Tensor<float>&, std::span<const double>);
template LossResult<double> mean_squared_error(const Tensor<double>&, std::span<const double>);

}  // namespace ppgbp::nn
