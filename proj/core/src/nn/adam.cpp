#include <cmath>

#include "ppgbp/common/error.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/nn/optim.hpp"

namespace ppgbp::nn {

template <typename T>
Tensor<T> glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  if (fan_in == 0 || fan_out == 0) throw ConfigError("glorot: fans must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<T> t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

template <typename T>
void adam_update(std::span<T> values, std::span<const T> grads, std::span<T> m, std::span<T> v,
                 std::uint64_t step, const AdamOptions& o) {
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double g = grads[i];
    const double mi = o.beta1 * m[i] + (1.0 - o.beta1) * g;
    const double vi = o.beta2 * v[i] + (1.0 - o.beta2) * g * g;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    values[i] = static_cast<T>(values[i] - o.lr * (mi / c1) / (std::sqrt(vi / c2) + o.eps));
  }
}

template <typename T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (auto* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  ++step_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto* p = params[i];
    if (m_[i].shape() != p->value.shape()) throw StructuralError("adam: parameter shape changed");
    adam_update<T>(p->value.values(), p->grad.values(), m_[i].values(), v_[i].values(), step_, options_);
    p->grad.fill(T{0});
  }
}

template <typename T>
void Adam<T>::restore(std::uint64_t step, std::vector<Tensor<T>> m, std::vector<Tensor<T>> v) {
  if (m.size() != v.size()) throw StructuralError("adam: moment lists differ in length");
  step_ = step;
  m_ = std::move(m);
  v_ = std::move(v);
}

template <typename T>
void Adam<T>::reset() {
  step_ = 0;
  m_.clear();
  v_.clear();
}

template Tensor<float> glorot_uniform(Shape, std::size_t, std::size_t, std::uint64_t);
template Tensor<double> glorot_uniform(Shape, std::size_t, std::size_t, std::uint64_t);
template void adam_update(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                          std::uint64_t, const AdamOptions&);
template void adam_update(std::span<double>, std::span<const double>, std::span<double>,
                          std::span<double>, std::uint64_t, const AdamOptions&);
template class Adam<float>;
template class Adam<double>;

}  // namespace ppgbp::nn
