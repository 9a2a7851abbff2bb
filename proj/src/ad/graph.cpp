#include "ad/graph.hpp"

#include "common/errors.hpp"

namespace cd::ad {

const Tensor& Var::value() const { return graph_->value(id_); }

Var Graph::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Graph::parameter(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Graph::record(Tensor value, std::vector<std::uint32_t> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (std::uint32_t in : inputs) {
    if (in >= nodes_.size()) throw Error("graph: input node does not exist");
    n.requires_grad = n.requires_grad || nodes_[in].requires_grad;
  }
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Tensor* Graph::grad_of(std::uint32_t id) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return nullptr;
  if (!n.has_grad) {
    n.grad = Tensor::zeros_like(n.value);
    n.has_grad = true;
  }
  return &n.grad;
}

void Graph::backward(Var loss) {
  if (&loss.graph() != this) throw Error("backward: loss belongs to another graph");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " +
                     shape_string(root.value.shape()));
  }
  for (Node& n : nodes_) {
    n.has_grad = false;
    n.grad = Tensor();
  }
  if (Tensor* g = grad_of(loss.id())) g->fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // The callback may write into earlier nodes only; `n` stays valid.
    n.backward(*this, n.grad, n.value);
  }
  for (Node& n : nodes_) {
    if (!n.param) continue;
    if (n.has_grad) {
      n.param->grad = n.grad;
    } else {
      n.param->grad = Tensor::zeros_like(n.param->value);
    }
  }
}

}  // namespace cd::ad
