#include "aat/autograd.hpp"

#include "aat/errors.hpp"

namespace aat {

template <typename T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad, std::string name) {
  if (!value.all_finite()) {
    throw NumericError("non-finite value in leaf '" + name + "' of shape " +
                       shape_to_string(value.shape()));
  }
  Node node;
  node.op = "leaf";
  node.name = std::move(name);
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
Var<T> Tape<T>::record(std::string op, Tensor<T> value, std::vector<Var<T>> inputs,
                       BackwardFn<T> backward) {
  if (!value.all_finite()) {
    throw NumericError("non-finite output from " + op + " of shape " +
                       shape_to_string(value.shape()));
  }
  Node node;
  node.op = std::move(op);
  node.value = std::move(value);
  for (const Var<T>& in : inputs) {
    if (&in.tape() != this) throw ContractError("operation '" + node.op + "' mixes tapes");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var<T>(this, nodes_.size() - 1);
}

template <typename T>
void Tape<T>::backward(Var<T> loss) {
  if (&loss.tape() != this) throw ContractError("backward on a foreign tape");
  const std::size_t root = loss.id();
  if (nodes_[root].value.numel() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        shape_to_string(nodes_[root].value.shape()));
  }
  for (Node& n : nodes_) {
    if (n.requires_grad) n.grad = Tensor<T>(n.value.shape());
  }
  if (!nodes_[root].requires_grad) {
    backward_done_ = true;
    return;
  }
  nodes_[root].grad.fill(T(1));
  for (std::size_t i = root + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    BackwardContext<T> ctx{n.value, n.grad, {}, {}};
    ctx.in_values.reserve(n.inputs.size());
    ctx.in_grads.reserve(n.inputs.size());
    for (std::size_t in : n.inputs) {
      ctx.in_values.push_back(&nodes_[in].value);
      ctx.in_grads.push_back(nodes_[in].requires_grad ? &nodes_[in].grad : nullptr);
    }
    n.backward(ctx);
  }
  backward_done_ = true;
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var<T> v) const {
  const Node& n = nodes_.at(v.id());
  if (!n.requires_grad) throw ContractError("gradient requested for a node without requires_grad");
  if (!backward_done_) throw ContractError("gradient requested before backward");
  return n.grad;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace aat
