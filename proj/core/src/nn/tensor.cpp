#include "ppgbp/nn/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ppgbp/common/error.hpp"

namespace ppgbp::nn {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, const std::vector<T>& values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
  if (element_count(shape_) != values_.size())
    throw StructuralError("tensor: shape " + shape_string(shape_) + " does not match " +
                          std::to_string(values_.size()) + " values");
}

template <typename T>
bool Tensor<T>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
Tensor<T> Tensor<T>::reshaped(Shape shape) const {
  if (element_count(shape) != values_.size())
    throw StructuralError("tensor: cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  Tensor<T> out = *this;
  out.shape_ = std::move(shape);
  return out;
}

template <typename T>
void check_finite(const Tensor<T>& t, const char* where) {
  if (!t.all_finite()) throw DivergenceError(std::string("non-finite values in ") + where);
}

template class Tensor<float>;
template class Tensor<double>;
template void check_finite(const Tensor<float>&, const char*);
template void check_finite(const Tensor<double>&, const char*);

}  // namespace ppgbp::nn
