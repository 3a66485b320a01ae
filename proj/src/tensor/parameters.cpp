#include "aat/parameters.hpp"

#include <cmath>

#include "aat/errors.hpp"

namespace aat {

template <typename T>
void ParameterSet<T>::add(std::string name, Tensor<T> value) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ContractError("duplicate parameter name '" + name + "'");
  }
  entries_.push_back({std::move(name), std::move(value)});
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

template <typename T>
const NamedTensor<T>& ParameterSet<T>::at(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw ContractError("no parameter named '" + name + "'");
}

template <typename T>
NamedTensor<T>& ParameterSet<T>::at(const std::string& name) {
  return const_cast<NamedTensor<T>&>(std::as_const(*this).at(name));
}

template <typename T>
bool ParameterSet<T>::same_layout(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name ||
        entries_[i].value.shape() != other.entries_[i].value.shape()) {
      return false;
    }
  }
  return true;
}

template <typename T>
std::vector<Var<T>> ParameterSet<T>::bind(Tape<T>& tape, bool requires_grad) const {
  std::vector<Var<T>> vars;
  vars.reserve(entries_.size());
  for (const auto& e : entries_) vars.push_back(tape.leaf(e.value, requires_grad, e.name));
  return vars;
}

template <typename T>
std::vector<Tensor<T>> ParameterSet<T>::gradients(const Tape<T>& tape,
                                                  const std::vector<Var<T>>& bound) {
  std::vector<Tensor<T>> grads;
  grads.reserve(bound.size());
  for (const Var<T>& v : bound) grads.push_back(tape.grad(v));
  return grads;
}

template <typename T>
double parameter_distance(const ParameterSet<T>& a, const ParameterSet<T>& b) {
  if (!a.same_layout(b)) throw ShapeError("parameter_distance: parameter layouts differ");
  double sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i].value;
    const auto& y = b[i].value;
    for (std::size_t k = 0; k < x.numel(); ++k) {
      const double d = static_cast<double>(x[k]) - static_cast<double>(y[k]);
      sq += d * d;
    }
  }
  return std::sqrt(sq);
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template double parameter_distance<float>(const ParameterSet<float>&, const ParameterSet<float>&);
template double parameter_distance<double>(const ParameterSet<double>&, const ParameterSet<double>&);

}  // namespace aat
