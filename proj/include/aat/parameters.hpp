#pragma once

#include <string>
#include <vector>

#include "aat/autograd.hpp"
#include "aat/tensor.hpp"

namespace aat {

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> value;
};

// Ordered, named parameter list. Order is part of the identity: two sets are
// compatible when names and shapes agree position by position.
template <typename T>
class ParameterSet {
 public:
  void add(std::string name, Tensor<T> value);

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;

  NamedTensor<T>& operator[](std::size_t i) { return entries_[i]; }
  const NamedTensor<T>& operator[](std::size_t i) const { return entries_[i]; }
  const NamedTensor<T>& at(const std::string& name) const;
  NamedTensor<T>& at(const std::string& name);

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  bool same_layout(const ParameterSet& other) const;

  // Places every parameter on the tape as a leaf. Teacher inference binds
  // with requires_grad = false so no parameter gradient is ever formed.
  std::vector<Var<T>> bind(Tape<T>& tape, bool requires_grad) const;

  // Gradients of bound parameters after tape.backward().
  static std::vector<Tensor<T>> gradients(const Tape<T>& tape, const std::vector<Var<T>>& bound);

 private:
  std::vector<NamedTensor<T>> entries_;
};

// Euclidean distance between two parameter sets of equal layout.
template <typename T>
double parameter_distance(const ParameterSet<T>& a, const ParameterSet<T>& b);

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;

}  // namespace aat
