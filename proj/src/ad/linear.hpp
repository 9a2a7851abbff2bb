#pragma once

#include <string>

#include "ad/graph.hpp"
#include "ad/parameters.hpp"
#include "common/random.hpp"

namespace cd::ad {

// Names of a weight [out x in] and bias [out] pair inside a ParameterStore.
// Layers refer to parameters by name so that weight containers stay copyable.
struct LinearParams {
  std::string weight;
  std::string bias;
  std::size_t in = 0;
  std::size_t out = 0;

  // Registers `prefix.weight` and `prefix.bias`: weights uniform in
  // +-sqrt(1/in), biases zero.
  static LinearParams create(ParameterStore& store, const std::string& prefix, std::size_t in,
                             std::size_t out, Rng& rng);

  Var forward(Graph& g, ParameterStore& store, Var x) const;
};

// Linear -> ReLU -> Linear.
struct TwoLayerMlp {
  LinearParams first;
  LinearParams second;

  static TwoLayerMlp create(ParameterStore& store, const std::string& prefix, std::size_t in,
                            std::size_t hidden, std::size_t out, Rng& rng);

  Var forward(Graph& g, ParameterStore& store, Var x) const;
};

}  // namespace cd::ad
