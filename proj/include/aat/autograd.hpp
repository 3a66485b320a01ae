#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "aat/tensor.hpp"

namespace aat {

template <typename T>
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Tensor<T>& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// What a backward closure sees: the output gradient, the input values and the
// input gradient slots (nullptr where that input does not need a gradient).
template <typename T>
struct BackwardContext {
  const Tensor<T>& out_value;
  const Tensor<T>& out_grad;
  std::vector<const Tensor<T>*> in_values;
  std::vector<Tensor<T>*> in_grads;
};

template <typename T>
using BackwardFn = std::function<void(BackwardContext<T>&)>;

// The computation record. Operations append nodes in execution order, so the
// node list is already topologically sorted; backward walks it in reverse.
// A tape belongs to one thread for its whole life.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves are checked for finiteness on entry.
  Var<T> leaf(Tensor<T> value, bool requires_grad = false, std::string name = {});

  // Used by primitive operations. The node requires a gradient iff any input
  // does; otherwise the closure is dropped.
  Var<T> record(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
                BackwardFn<T> backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every node. Throws
  // ContractError when loss is not a single element.
  void backward(Var<T> loss);

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  bool is_leaf(std::size_t id) const { return nodes_.at(id).inputs.empty(); }
  const std::string& op(std::size_t id) const { return nodes_.at(id).op; }
  const std::string& name(std::size_t id) const { return nodes_.at(id).name; }
  const std::vector<std::size_t>& inputs(std::size_t id) const {
    return nodes_.at(id).inputs;
  }

  // Gradient after backward. A zero tensor of matching shape for nodes that
  // require a gradient but were not reached; ContractError for nodes that do
  // not require one.
  const Tensor<T>& grad(Var<T> v) const;

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  struct Node {
    std::string op;
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    BackwardFn<T> backward;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

template <typename T>
const Tensor<T>& Var<T>::value() const {
  return tape_->value(id_);
}

template <typename T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace aat
