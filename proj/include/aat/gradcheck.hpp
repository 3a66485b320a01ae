#pragma once

#include <functional>

#include "aat/tensor.hpp"

namespace aat {

// Central-difference estimate (f(x+eps e_i) - f(x-eps e_i)) / (2 eps) for every
// element of x. Used as the reference when checking backward().
template <typename T>
Tensor<T> finite_difference_gradient(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x,
                                     T eps);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
template <typename T>
double max_relative_error(const Tensor<T>& a, const Tensor<T>& b, double floor = 1e-6);

extern template Tensor<float> finite_difference_gradient<float>(
    const std::function<float(const Tensor<float>&)>&, const Tensor<float>&, float);
extern template Tensor<double> finite_difference_gradient<double>(
    const std::function<double(const Tensor<double>&)>&, const Tensor<double>&, double);

}  // namespace aat
