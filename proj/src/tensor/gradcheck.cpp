#include "aat/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "aat/errors.hpp"

namespace aat {

template <typename T>
Tensor<T> finite_difference_gradient(const std::function<T(const Tensor<T>&)>& f, const Tensor<T>& x,
                                     T eps) {
  if (!(eps > T(0))) throw ContractError("finite_difference_gradient: eps must be > 0");
  Tensor<T> grad(x.shape());
  Tensor<T> probe = x;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const T orig = probe[i];
    probe[i] = orig + eps;
    const T up = f(probe);
    probe[i] = orig - eps;
    const T down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (T(2) * eps);
  }
  return grad;
}

template <typename T>
double max_relative_error(const Tensor<T>& a, const Tensor<T>& b, double floor) {
  if (a.shape() != b.shape()) {
    throw ShapeError("max_relative_error: " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
  double worst = 0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double x = a[i], y = b[i];
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

template Tensor<float> finite_difference_gradient<float>(
    const std::function<float(const Tensor<float>&)>&, const Tensor<float>&, float);
template Tensor<double> finite_difference_gradient<double>(
    const std::function<double(const Tensor<double>&)>&, const Tensor<double>&, double);
template double max_relative_error<float>(const Tensor<float>&, const Tensor<float>&, double);
template double max_relative_error<double>(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace aat
