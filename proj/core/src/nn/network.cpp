#include "ppgbp/nn/network.hpp"

#include "ppgbp/common/error.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/nn/optim.hpp"

namespace ppgbp::nn {

std::pair<std::size_t, std::size_t> glorot_fans(const Shape& s) {
  if (s.size() == 3) return {s[1] * s[2], s[0] * s[2]};
  if (s.size() == 2) return {s[1], s[0]};
  throw StructuralError("glorot: unsupported weight rank " + shape_string(s));
}

template <typename T>
Network<T>::Network(ArchitectureConfig config, std::uint64_t init_seed) : config_(std::move(config)) {
  const auto shapes = infer_shapes(config_);
  Shape in{1, config_.input_length};
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    const auto& l = config_.layers[i];
    switch (l.kind) {
      case LayerKind::conv1d:
        layers_.push_back(std::make_unique<Conv1d<T>>(in[0], l.units, l.kernel, l.stride, l.padding, true));
        break;
      case LayerKind::batchnorm:
        layers_.push_back(std::make_unique<BatchNorm<T>>(in[0]));
        break;
      case LayerKind::relu:
        layers_.push_back(std::make_unique<Relu<T>>());
        break;
      case LayerKind::maxpool1d:
        layers_.push_back(std::make_unique<MaxPool1d<T>>(
            l.kernel, l.stride, l.padding == Padding::same ? (l.kernel - 1) / 2 : 0));
        break;
      case LayerKind::globalavgpool:
        layers_.push_back(std::make_unique<GlobalAvgPool<T>>());
        break;
      case LayerKind::dense:
      case LayerKind::softmax_head:
      case LayerKind::linear_head:
        layers_.push_back(std::make_unique<Dense<T>>(element_count(in), l.units));
        break;
      case LayerKind::dropout:
        layers_.push_back(std::make_unique<Dropout<T>>(l.rate));
        break;
      case LayerKind::residual_basic:
      case LayerKind::residual_bottleneck:
        layers_.push_back(std::make_unique<ResidualBlock<T>>(
            l.kind == LayerKind::residual_basic ? ResidualVariant::basic : ResidualVariant::bottleneck,
            in[0], l.units, l.stride, l.projection));
        break;
    }
    if (l.kind == LayerKind::linear_head)
      layers_.push_back(std::make_unique<ScaleShift<T>>(config_.head.scale, config_.head.center));
    in = shapes[i];
  }

  std::uint64_t index = 0;
  for (auto* p : parameters()) {
    const auto& shape = p->value.shape();
    if (p->name == "weight") {
      const auto [fan_in, fan_out] = glorot_fans(shape);
      p->value = glorot_uniform<T>(shape, fan_in, fan_out, mix_seed(init_seed, index));
    }
    p->grad = Tensor<T>(shape);
    ++index;
  }
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, Mode mode) {
  if (x.rank() != 3 || x.dim(1) != 1 || x.dim(2) != config_.input_length)
    throw StructuralError("network " + config_.name + ": expected input [batch, 1, " +
                          std::to_string(config_.input_length) + "], got " + shape_string(x.shape()));
  Tensor<T> h = x;
  for (auto& layer : layers_) h = layer->forward(h, mode);
  return h;
}

template <typename T>
Tensor<T> Network<T>::backward(const Tensor<T>& dy) {
  Tensor<T> g = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_) l->collect_parameters(out);
  return out;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::buffers() {
  std::vector<Tensor<T>*> out;
  for (auto& l : layers_) l->collect_buffers(out);
  return out;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(T{0});
}

template <typename T>
std::size_t Network<T>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::reseed(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->reseed(mix_seed(seed, i));
}

template class Network<float>;
template class Network<double>;

}  // namespace ppgbp::nn
