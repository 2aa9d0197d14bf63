#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ppgbp/nn/tensor.hpp"

namespace ppgbp::nn {

enum class Mode { train, eval };

/// A differentiable stage. forward() caches what backward() needs; backward()
/// accumulates parameter gradients and returns the gradient w.r.t. the input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual void collect_parameters(std::vector<Parameter<T>*>& /*out*/) {}
  /// Non-trainable state that still belongs in a checkpoint (running statistics).
  virtual void collect_buffers(std::vector<Tensor<T>*>& /*out*/) {}
  /// Seed for stochastic layers; called before every training forward pass.
  virtual void reseed(std::uint64_t /*seed*/) {}
  virtual std::string name() const = 0;
};

enum class Padding { valid, same };

/// 1D cross-correlation over [batch, channels, length].
template <typename T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride = 1, Padding padding = Padding::valid, bool bias = true);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;
  std::string name() const override { return "conv1d"; }

  std::size_t output_length(std::size_t length) const;
  std::size_t pad() const { return pad_; }
  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }

 private:
  void im2col(const T* x, std::size_t length, std::size_t out_len, T* col) const;
  std::size_t in_, out_, kernel_, stride_, pad_;
  bool has_bias_;
  Parameter<T> weight_;  // [out, in, kernel]
  Parameter<T> bias_;    // [out]
  Tensor<T> input_;
};

/// Per-channel normalization for [batch, channels] or [batch, channels, length].
template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.9, double eps = 1e-5);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;
  void collect_buffers(std::vector<Tensor<T>*>& out) override;
  std::string name() const override { return "batchnorm"; }

  Parameter<T>& gamma() { return gamma_; }
  Parameter<T>& beta() { return beta_; }
  Tensor<T>& running_mean() { return running_mean_; }
  Tensor<T>& running_var() { return running_var_; }

 private:
  std::size_t channels_;
  double momentum_, eps_;
  Parameter<T> gamma_, beta_;
  Tensor<T> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<double> inv_std_;
  Mode mode_ = Mode::eval;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::string name() const override { return "relu"; }

 private:
  Tensor<T> input_;
};

/// Max pooling with implicit -inf padding.
template <typename T>
class MaxPool1d final : public Layer<T> {
 public:
  MaxPool1d(std::size_t kernel, std::size_t stride, std::size_t pad = 0);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::string name() const override { return "maxpool1d"; }
  std::size_t output_length(std::size_t length) const;

 private:
  std::size_t kernel_, stride_, pad_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// [batch, channels, length] -> [batch, channels].
template <typename T>
class GlobalAvgPool final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::string name() const override { return "globalavgpool"; }

 private:
  Shape input_shape_;
};

/// Fully connected layer; inputs of rank > 2 are flattened per sample.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in_features, std::size_t out_features);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;
  std::string name() const override { return "dense"; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Parameter<T> weight_;  // [out, in]
  Parameter<T> bias_;    // [out]
  Tensor<T> input_;
  Shape input_shape_;
};

/// Inverted dropout. Identity in eval mode.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate);
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void reseed(std::uint64_t seed) override { seed_ = seed; }
  std::string name() const override { return "dropout"; }

 private:
  double rate_;
  std::uint64_t seed_ = 0;
  std::vector<T> mask_;
};

/// Fixed y = offset + scale * x. Maps a unit-scale regression output to mmHg.
template <typename T>
class ScaleShift final : public Layer<T> {
 public:
  ScaleShift(double scale, double offset) : scale_(scale), offset_(offset) {}
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::string name() const override { return "scale_shift"; }

 private:
  double scale_, offset_;
};

enum class ResidualVariant { basic, bottleneck };

/// basic:      conv3-BN-ReLU-conv3-BN (+ skip) -> ReLU
/// bottleneck: conv1-BN-ReLU-conv3-BN-ReLU-conv1(x4)-BN (+ skip) -> ReLU
/// Stride applies to the first conv; the projection skip is conv1(stride)-BN.
template <typename T>
class ResidualBlock final : public Layer<T> {
 public:
  static constexpr std::size_t kExpansion = 4;

  ResidualBlock(ResidualVariant variant, std::size_t in_channels, std::size_t channels,
                std::size_t stride, bool projection);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  void collect_parameters(std::vector<Parameter<T>*>& out) override;
  void collect_buffers(std::vector<Tensor<T>*>& out) override;
  std::string name() const override;

  std::size_t out_channels() const { return out_channels_; }
  /// Main-branch layers in execution order (exposed for tests).
  std::vector<Layer<T>*> branch();

 private:
  ResidualVariant variant_;
  std::size_t out_channels_;
  std::vector<std::unique_ptr<Layer<T>>> main_;
  std::unique_ptr<Conv1d<T>> proj_conv_;
  std::unique_ptr<BatchNorm<T>> proj_bn_;
  Tensor<T> sum_;  // pre-activation output
};

}  // namespace ppgbp::nn
