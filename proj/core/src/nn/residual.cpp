#include "ppgbp/common/error.hpp"
#include "ppgbp/nn/layers.hpp"

namespace ppgbp::nn {

template <typename T>
ResidualBlock<T>::ResidualBlock(ResidualVariant variant, std::size_t in_channels,
                                std::size_t channels, std::size_t stride, bool projection)
    : variant_(variant) {
  if (stride == 0) throw StructuralError("residual block: stride must be positive");
  if (variant == ResidualVariant::basic) {
    out_channels_ = channels;
    main_.push_back(std::make_unique<Conv1d<T>>(in_channels, channels, 3, stride, Padding::same, false));
    main_.push_back(std::make_unique<BatchNorm<T>>(channels));
    main_.push_back(std::make_unique<Relu<T>>());
    main_.push_back(std::make_unique<Conv1d<T>>(channels, channels, 3, 1, Padding::same, false));
    main_.push_back(std::make_unique<BatchNorm<T>>(channels));
  } else {
    out_channels_ = channels * kExpansion;
    main_.push_back(std::make_unique<Conv1d<T>>(in_channels, channels, 1, stride, Padding::valid, false));
    main_.push_back(std::make_unique<BatchNorm<T>>(channels));
    main_.push_back(std::make_unique<Relu<T>>());
    main_.push_back(std::make_unique<Conv1d<T>>(channels, channels, 3, 1, Padding::same, false));
    main_.push_back(std::make_unique<BatchNorm<T>>(channels));
    main_.push_back(std::make_unique<Relu<T>>());
    main_.push_back(std::make_unique<Conv1d<T>>(channels, out_channels_, 1, 1, Padding::valid, false));
    main_.push_back(std::make_unique<BatchNorm<T>>(out_channels_));
  }
  if (projection) {
    proj_conv_ = std::make_unique<Conv1d<T>>(in_channels, out_channels_, 1, stride, Padding::valid, false);
    proj_bn_ = std::make_unique<BatchNorm<T>>(out_channels_);
  } else if (stride != 1 || in_channels != out_channels_) {
    throw StructuralError("residual block: " + std::to_string(in_channels) + " -> " +
                          std::to_string(out_channels_) + " channels (stride " + std::to_string(stride) +
                          ") requires a projection skip");
  }
}

template <typename T>
std::string ResidualBlock<T>::name() const {
  return variant_ == ResidualVariant::basic ? "residual_basic" : "residual_bottleneck";
}

template <typename T>
std::vector<Layer<T>*> ResidualBlock<T>::branch() {
  std::vector<Layer<T>*> out;
  for (auto& l : main_) out.push_back(l.get());
  return out;
}

template <typename T>
Tensor<T> ResidualBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> h = x;
  for (auto& layer : main_) h = layer->forward(h, mode);
  Tensor<T> skip = proj_conv_ ? proj_bn_->forward(proj_conv_->forward(x, mode), mode) : x;
  if (skip.shape() != h.shape())
    throw StructuralError("residual block: skip " + shape_string(skip.shape()) + " vs branch " +
                          shape_string(h.shape()));
  sum_ = Tensor<T>(h.shape());
  Tensor<T> y(h.shape());
  for (std::size_t i = 0; i < h.size(); ++i) {
    sum_[i] = h[i] + skip[i];
    y[i] = sum_[i] > T{0} ? sum_[i] : T{0};
  }
  return y;
}

template <typename T>
Tensor<T> ResidualBlock<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dsum(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dsum[i] = sum_[i] > T{0} ? dy[i] : T{0};
  Tensor<T> dh = dsum;
  for (auto it = main_.rbegin(); it != main_.rend(); ++it) dh = (*it)->backward(dh);
  Tensor<T> dskip = proj_conv_ ? proj_conv_->backward(proj_bn_->backward(dsum)) : dsum;
  for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dskip[i];
  return dh;
}

template <typename T>
void ResidualBlock<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  for (auto& l : main_) l->collect_parameters(out);
  if (proj_conv_) {
    proj_conv_->collect_parameters(out);
    proj_bn_->collect_parameters(out);
  }
}

template <typename T>
void ResidualBlock<T>::collect_buffers(std::vector<Tensor<T>*>& out) {
  for (auto& l : main_) l->collect_buffers(out);
  if (proj_bn_) proj_bn_->collect_buffers(out);
}

template class ResidualBlock<float>;
template class ResidualBlock<double>;

}  // namespace ppgbp::nn
