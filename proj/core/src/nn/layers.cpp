#include <cmath>
#include <limits>

#include "ppgbp/common/error.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/nn/layers.hpp"

namespace ppgbp::nn {

namespace {

struct ChannelLayout {
  std::size_t batch, channels, length;
};

ChannelLayout channel_layout(const Shape& s, std::size_t channels, const char* who) {
  if ((s.size() != 2 && s.size() != 3) || s[1] != channels)
    throw StructuralError(std::string(who) + ": expected [batch, " + std::to_string(channels) +
                          "(, length)], got " + shape_string(s));
  return {s[0], s[1], s.size() == 3 ? s[2] : 1};
}

}  // namespace

// ---- BatchNorm ----

template <typename T>
BatchNorm<T>::BatchNorm(std::size_t channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_("gamma", Tensor<T>({channels}, T{1})),
      beta_("beta", Tensor<T>({channels}, T{0})),
      running_mean_({channels}, T{0}),
      running_var_({channels}, T{1}) {}

template <typename T>
Tensor<T> BatchNorm<T>::forward(const Tensor<T>& x, Mode mode) {
  const auto [batch, ch, len] = channel_layout(x.shape(), channels_, "batchnorm");
  mode_ = mode;
  Tensor<T> y(x.shape());
  xhat_ = Tensor<T>(x.shape());
  inv_std_.assign(ch, 0.0);
  const std::size_t n = batch * len;

  if (mode == Mode::train && batch < 2)
    throw StructuralError("batchnorm: training mode needs a batch of at least 2 samples");

  for (std::size_t c = 0; c < ch; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t l = 0; l < len; ++l) sum += x[(b * ch + c) * len + l];
      mean = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t l = 0; l < len; ++l) {
          const double d = x[(b * ch + c) * len + l] - mean;
          ss += d * d;
        }
      var = ss / static_cast<double>(n);
      const double unbiased = ss / static_cast<double>(n - 1);
      running_mean_[c] = static_cast<T>(momentum_ * running_mean_[c] + (1.0 - momentum_) * mean);
      running_var_[c] = static_cast<T>(momentum_ * running_var_[c] + (1.0 - momentum_) * unbiased);
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const double g = gamma_.value[c], bt = beta_.value[c];
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t l = 0; l < len; ++l) {
        const std::size_t i = (b * ch + c) * len + l;
        const double xh = (x[i] - mean) * inv;
        xhat_[i] = static_cast<T>(xh);
        y[i] = static_cast<T>(g * xh + bt);
      }
  }
  return y;
}

template <typename T>
Tensor<T> BatchNorm<T>::backward(const Tensor<T>& dy) {
  const auto [batch, ch, len] = channel_layout(dy.shape(), channels_, "batchnorm");
  if (dy.shape() != xhat_.shape()) throw StructuralError("batchnorm: gradient shape mismatch");
  const double n = static_cast<double>(batch * len);
  Tensor<T> dx(dy.shape());
  for (std::size_t c = 0; c < ch; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t l = 0; l < len; ++l) {
        const std::size_t i = (b * ch + c) * len + l;
        sum_dy += dy[i];
        sum_dy_xhat += static_cast<double>(dy[i]) * xhat_[i];
      }
    gamma_.grad[c] += static_cast<T>(sum_dy_xhat);
    beta_.grad[c] += static_cast<T>(sum_dy);
    const double g = gamma_.value[c];
    const double inv = inv_std_[c];
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t l = 0; l < len; ++l) {
        const std::size_t i = (b * ch + c) * len + l;
        if (mode_ == Mode::train)
          dx[i] = static_cast<T>(g * inv / n * (n * dy[i] - sum_dy - xhat_[i] * sum_dy_xhat));
        else
          dx[i] = static_cast<T>(g * inv * dy[i]);
      }
  }
  return dx;
}

template <typename T>
void BatchNorm<T>::collect_parameters(std::vector<Parameter<T>*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

template <typename T>
void BatchNorm<T>::collect_buffers(std::vector<Tensor<T>*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ---- ReLU ----

template <typename T>
Tensor<T> Relu<T>::forward(const Tensor<T>& x, Mode /*mode*/) {
  input_ = x;
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
  return y;
}

template <typename T>
Tensor<T> Relu<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = input_[i] > T{0} ? dy[i] : T{0};
  return dx;
}

// ---- MaxPool1d ----

template <typename T>
MaxPool1d<T>::MaxPool1d(std::size_t kernel, std::size_t stride, std::size_t pad)
    : kernel_(kernel), stride_(stride), pad_(pad) {
  if (kernel_ == 0 || stride_ == 0 || pad_ >= kernel_)
    throw StructuralError("maxpool1d: invalid kernel/stride/padding");
}

template <typename T>
std::size_t MaxPool1d<T>::output_length(std::size_t length) const {
  if (length + 2 * pad_ < kernel_) throw StructuralError("maxpool1d: input shorter than kernel");
  return (length + 2 * pad_ - kernel_) / stride_ + 1;
}

template <typename T>
Tensor<T> MaxPool1d<T>::forward(const Tensor<T>& x, Mode /*mode*/) {
  if (x.rank() != 3) throw StructuralError("maxpool1d: expected rank-3 input, got " + shape_string(x.shape()));
  const std::size_t rows = x.dim(0) * x.dim(1), len = x.dim(2);
  const std::size_t out_len = output_length(len);
  input_shape_ = x.shape();
  Tensor<T> y({x.dim(0), x.dim(1), out_len});
  argmax_.assign(y.size(), 0);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * len;
    for (std::size_t t = 0; t < out_len; ++t) {
      const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * stride_) - static_cast<std::ptrdiff_t>(pad_);
      T best = -std::numeric_limits<T>::infinity();
      std::size_t best_i = 0;
      for (std::size_t k = 0; k < kernel_; ++k) {
        const std::ptrdiff_t p = start + static_cast<std::ptrdiff_t>(k);
        if (p < 0 || p >= static_cast<std::ptrdiff_t>(len)) continue;
        if (xr[p] > best) {
          best = xr[p];
          best_i = static_cast<std::size_t>(p);
        }
      }
      y[r * out_len + t] = best;
      argmax_[r * out_len + t] = r * len + best_i;
    }
  }
  return y;
}

template <typename T>
Tensor<T> MaxPool1d<T>::backward(const Tensor<T>& dy) {
  if (dy.size() != argmax_.size()) throw StructuralError("maxpool1d: gradient shape mismatch");
  Tensor<T> dx(input_shape_);
  for (std::size_t i = 0; i < dy.size(); ++i) dx[argmax_[i]] += dy[i];
  return dx;
}

// ---- GlobalAvgPool ----

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x, Mode /*mode*/) {
  if (x.rank() != 3) throw StructuralError("globalavgpool: expected rank-3 input, got " + shape_string(x.shape()));
  input_shape_ = x.shape();
  const std::size_t rows = x.dim(0) * x.dim(1), len = x.dim(2);
  Tensor<T> y({x.dim(0), x.dim(1)});
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t l = 0; l < len; ++l) s += x[r * len + l];
    y[r] = static_cast<T>(s / static_cast<double>(len));
  }
  return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx(input_shape_);
  const std::size_t len = input_shape_.at(2);
  const T scale = T{1} / static_cast<T>(len);
  for (std::size_t r = 0; r < dy.size(); ++r)
    for (std::size_t l = 0; l < len; ++l) dx[r * len + l] = dy[r] * scale;
  return dx;
}

// ---- Dropout ----

template <typename T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout: rate must be in [0, 1)");
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode) {
  if (mode == Mode::eval || rate_ == 0.0) {
    mask_.assign(x.size(), T{1});
    return x;
  }
  Rng rng(seed_);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
  mask_.resize(x.size());
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng.uniform() >= rate_ ? keep_scale : T{0};
    y[i] = x[i] * mask_[i];
  }
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask_[i];
  return dx;
}

// ---- ScaleShift ----

template <typename T>
Tensor<T> ScaleShift<T>::forward(const Tensor<T>& x, Mode /*mode*/) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<T>(offset_ + scale_ * x[i]);
  return y;
}

template <typename T>
Tensor<T> ScaleShift<T>::backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = static_cast<T>(scale_ * dy[i]);
  return dx;
}

template class BatchNorm<float>;
template class BatchNorm<double>;
template class Relu<float>;
template class Relu<double>;
template class MaxPool1d<float>;
template class MaxPool1d<double>;
template class GlobalAvgPool<float>;
template class GlobalAvgPool<double>;
template class Dropout<float>;
template class Dropout<double>;
template class ScaleShift<float>;
template class ScaleShift<double>;

}  // namespace ppgbp::nn
