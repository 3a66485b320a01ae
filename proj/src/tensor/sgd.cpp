#include "aat/sgd.hpp"

#include "aat/errors.hpp"

namespace aat {

template <typename T>
Sgd<T>::Sgd(SgdOptions options) : options_(options) {
  if (!(options_.learning_rate > 0)) throw ContractError("SGD learning rate must be > 0");
}

template <typename T>
void Sgd<T>::set_learning_rate(double lr) {
  if (!(lr > 0)) throw ContractError("SGD learning rate must be > 0");
  options_.learning_rate = lr;
}

template <typename T>
void Sgd<T>::step(ParameterSet<T>& params, const std::vector<Tensor<T>>& grads) {
  if (grads.size() != params.size()) {
    throw ShapeError("sgd: " + std::to_string(grads.size()) + " gradients for " +
                     std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].shape() != params[i].value.shape()) {
      throw ShapeError("sgd: gradient " + shape_to_string(grads[i].shape()) + " for parameter '" +
                       params[i].name + "' " + shape_to_string(params[i].value.shape()));
    }
    if (!grads[i].all_finite()) {
      throw NumericError("sgd: non-finite gradient for '" + params[i].name + "', step refused");
    }
  }
  if (velocity_.empty()) {
    for (const auto& p : params) velocity_.emplace_back(p.value.shape());
  }
  const T lr = static_cast<T>(options_.learning_rate);
  const T mu = static_cast<T>(options_.momentum);
  const T wd = static_cast<T>(options_.weight_decay);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto p = params[i].value.data();
    auto v = velocity_[i].data();
    auto g = grads[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = mu * v[k] + (g[k] + wd * p[k]);
      p[k] -= lr * v[k];
    }
  }
}

template class Sgd<float>;
template class Sgd<double>;

}  // namespace aat
