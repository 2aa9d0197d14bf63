#include <Eigen/Core>

#include "ppgbp/common/error.hpp"
#include "ppgbp/nn/layers.hpp"

namespace ppgbp::nn {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
Conv1d<T>::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, Padding padding, bool bias)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      pad_(padding == Padding::same ? (kernel - 1) / 2 : 0),
      has_bias_(bias),
      weight_("weight", Tensor<T>({out_channels, in_channels, kernel})),
      bias_("bias", Tensor<T>({bias ? out_channels : 0})) {
  if (in_ == 0 || out_ == 0 || kernel_ == 0 || stride_ == 0)
    throw StructuralError("conv1d: channels, kernel and stride must be positive");
}

template <typename T>
std::size_t Conv1d<T>::output_length(std::size_t length) const {
  if (length + 2 * pad_ < kernel_)
    throw StructuralError("conv1d: input length " + std::to_string(length) +
                          " shorter than kernel " + std::to_string(kernel_));
  return (length + 2 * pad_ - kernel_) / stride_ + 1;
}

template <typename T>
void Conv1d<T>::im2col(const T* x, std::size_t length, std::size_t out_len, T* col) const {
  for (std::size_t c = 0; c < in_; ++c) {
    const T* xc = x + c * length;
    for (std::size_t k = 0; k < kernel_; ++k) {
      T* row = col + (c * kernel_ + k) * out_len;
      for (std::size_t t = 0; t < out_len; ++t) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride_ + k) -
                                   static_cast<std::ptrdiff_t>(pad_);
        row[t] = (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) ? xc[pos] : T{0};
      }
    }
  }
}

template <typename T>
Tensor<T> Conv1d<T>::forward(const Tensor<T>& x, Mode /*mode*/) {
  if (x.rank() != 3 || x.dim(1) != in_)
    throw StructuralError("conv1d: expected [batch, " + std::to_string(in_) + ", length], got " +
                          shape_string(x.shape()));
  const std::size_t batch = x.dim(0), length = x.dim(2);
  const std::size_t out_len = output_length(length);
  input_ = x;

  Tensor<T> y({batch, out_, out_len});
  const std::size_t rows = in_ * kernel_;
  AlignedVector<T> col(rows * out_len);
  CMapMat<T> w(weight_.value.data(), out_, rows);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.data() + b * in_ * length, length, out_len, col.data());
    MapMat<T> yb(y.data() + b * out_ * out_len, out_, out_len);
    yb.noalias() = w * CMapMat<T>(col.data(), rows, out_len);
    if (has_bias_)
      for (std::size_t o = 0; o < out_; ++o) yb.row(o).array() += bias_.value[o];
  }
  return y;
}

template <typename T>
Tensor<T> Conv1d<T>::backward(const Tensor<T>& dy) {
  const std::size_t batch = input_.dim(0), length = input_.dim(2);
  const std::size_t out_len = output_length(length);
  if (dy.shape() != Shape{batch, out_, out_len})
    throw StructuralError("conv1d: gradient shape " + shape_string(dy.shape()) + " mismatch");

  const std::size_t rows = in_ * kernel_;
  Tensor<T> dx(input_.shape());
  AlignedVector<T> col(rows * out_len), dcol(rows * out_len);
  CMapMat<T> w(weight_.value.data(), out_, rows);
  MapMat<T> dw(weight_.grad.data(), out_, rows);
  for (std::size_t b = 0; b < batch; ++b) {
    CMapMat<T> dyb(dy.data() + b * out_ * out_len, out_, out_len);
    im2col(input_.data() + b * in_ * length, length, out_len, col.data());
    dw.noalias() += dyb * CMapMat<T>(col.data(), rows, out_len).transpose();
    if (has_bias_)
      for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += dyb.row(o).sum();

    MapMat<T>(dcol.data(), rows, out_len).noalias() = w.transpose() * dyb;
    T* dxb = dx.data() + b * in_ * length;
    for (std::size_t c = 0; c < in_; ++c) {
      for (std::size_t k = 0; k < kernel_; ++k) {
        const T* row = dcol.data() + (c * kernel_ + k) * out_len;
        for (std::size_t t = 0; t < out_len; ++t) {
          const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * stride_ + k) -
                                     static_cast<std::ptrdiff_t>(pad_);
          if (pos >= 0 && pos < static_cast<std::ptrdiff_t>(length)) dxb[c * length + pos] += row[t];
        }
      }
    }
  }
  return dx;
}

template <typename T>
void Conv1d<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_);
  if (has_bias_) out.push_back(&bias_);
}

template class Conv1d<float>;
template class Conv1d<double>;

// Dense lives here as well since it shares the GEMM helpers.

template <typename T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : in_(in_features),
      out_(out_features),
      weight_("weight", Tensor<T>({out_features, in_features})),
      bias_("bias", Tensor<T>({out_features})) {
  if (in_ == 0 || out_ == 0) throw StructuralError("dense: feature counts must be positive");
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, Mode /*mode*/) {
  if (x.rank() < 2 || x.size() != x.dim(0) * in_)
    throw StructuralError("dense: expected " + std::to_string(in_) + " features per sample, got " +
                          shape_string(x.shape()));
  const std::size_t batch = x.dim(0);
  input_shape_ = x.shape();
  input_ = x.reshaped({batch, in_});
  Tensor<T> y({batch, out_});
  MapMat<T> ym(y.data(), batch, out_);
  ym.noalias() = CMapMat<T>(input_.data(), batch, in_) *
                 CMapMat<T>(weight_.value.data(), out_, in_).transpose();
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out_; ++o) ym(b, o) += bias_.value[o];
  return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& dy) {
  const std::size_t batch = input_.dim(0);
  if (dy.shape() != Shape{batch, out_})
    throw StructuralError("dense: gradient shape " + shape_string(dy.shape()) + " mismatch");
  CMapMat<T> dym(dy.data(), batch, out_);
  MapMat<T>(weight_.grad.data(), out_, in_).noalias() +=
      dym.transpose() * CMapMat<T>(input_.data(), batch, in_);
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += dym(b, o);
  Tensor<T> dx({batch, in_});
  MapMat<T>(dx.data(), batch, in_).noalias() = dym * CMapMat<T>(weight_.value.data(), out_, in_);
  return dx.reshaped(input_shape_);
}

template <typename T>
void Dense<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

template class Dense<float>;
template class Dense<double>;

}  // namespace ppgbp::nn
