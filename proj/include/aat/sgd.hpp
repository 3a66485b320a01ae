#pragma once

#include <vector>

#include "aat/parameters.hpp"

namespace aat {

struct SgdOptions {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
};

// Momentum SGD in the common form
//   v <- momentum * v + (g + weight_decay * p)
//   p <- p - lr * v
// Velocity buffers are created on the first step and persist across calls.
template <typename T>
class Sgd {
 public:
  explicit Sgd(SgdOptions options);

  // Throws NumericError (and leaves params untouched) if any gradient is
  // non-finite; ShapeError if grads do not line up with params.
  void step(ParameterSet<T>& params, const std::vector<Tensor<T>>& grads);

  const SgdOptions& options() const { return options_; }
  void set_learning_rate(double lr);

  const std::vector<Tensor<T>>& velocity() const { return velocity_; }
  void set_velocity(std::vector<Tensor<T>> velocity) { velocity_ = std::move(velocity); }

 private:
  SgdOptions options_;
  std::vector<Tensor<T>> velocity_;
};

extern template class Sgd<float>;
extern template class Sgd<double>;

}  // namespace aat
