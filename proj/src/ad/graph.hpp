#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "ad/parameters.hpp"
#include "ad/tensor.hpp"

namespace cd::ad {

class Graph;

// Handle to a node recorded on a Graph.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::uint32_t id) : graph_(graph), id_(id) {}

  Graph& graph() const { return *graph_; }
  std::uint32_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  Graph* graph_ = nullptr;
  std::uint32_t id_ = 0;
};

// Tape of operations in execution order. Node ids increase monotonically, so
// the tape is acyclic by construction and backward() is a single reverse
// sweep. A graph is confined to one thread; build a fresh one per pass.
class Graph {
 public:
  // Receives the node's output gradient and value; accumulates into input
  // gradients through grad_of().
  using BackwardFn =
      std::function<void(Graph&, const Tensor& out_grad, const Tensor& out_value)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // One leaf per parameter; repeated calls return the same node.
  Var parameter(Parameter& p);

  const Tensor& value(std::uint32_t id) const { return nodes_[id].value; }
  bool requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  Var record(Tensor value, std::vector<std::uint32_t> inputs, BackwardFn backward);

  // Gradient accumulator of an input node, or nullptr when the node does not
  // require gradients. Only valid during backward().
  Tensor* grad_of(std::uint32_t id);

  // Reverse sweep from a scalar loss. Overwrites the grad of every parameter
  // registered on this graph; unreachable parameters receive zeros.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    std::vector<std::uint32_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, std::uint32_t> param_nodes_;
};

}  // namespace cd::ad
