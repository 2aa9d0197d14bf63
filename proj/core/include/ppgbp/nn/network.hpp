#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "ppgbp/nn/architecture.hpp"
#include "ppgbp/nn/layers.hpp"

namespace ppgbp::nn {

/// Sequential model instantiated from an ArchitectureConfig. Input is
/// [batch, 1, input_length]; output is [batch, head width].
template <typename T>
class Network {
 public:
  /// Glorot-initialized weights (seeded per parameter), zero biases, BN scale 1 / shift 0.
  Network(ArchitectureConfig config, std::uint64_t init_seed);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  Tensor<T> backward(const Tensor<T>& dy);

  std::vector<Parameter<T>*> parameters();
  std::vector<Tensor<T>*> buffers();
  void zero_grad();
  std::size_t parameter_count();

  /// Reseeds every stochastic layer from (seed, layer position).
  void reseed(std::uint64_t seed);

  const ArchitectureConfig& config() const { return config_; }
  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }

 private:
  ArchitectureConfig config_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// Glorot fans for a parameter: conv weights use channels * kernel.
std::pair<std::size_t, std::size_t> glorot_fans(const Shape& weight_shape);

}  // namespace ppgbp::nn
