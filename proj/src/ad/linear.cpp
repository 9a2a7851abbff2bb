#include "ad/linear.hpp"

#include <cmath>

#include "ad/ops.hpp"

namespace cd::ad {

LinearParams LinearParams::create(ParameterStore& store, const std::string& prefix,
                                  std::size_t in, std::size_t out, Rng& rng) {
  LinearParams p{prefix + ".weight", prefix + ".bias", in, out};
  const double bound = std::sqrt(1.0 / static_cast<double>(in));
  Tensor w({out, in});
  for (double& v : w.values()) v = uniform(rng, -bound, bound);
  store.add(p.weight, std::move(w));
  store.add(p.bias, Tensor({out}));
  return p;
}

Var LinearParams::forward(Graph& g, ParameterStore& store, Var x) const {
  return linear(x, g.parameter(store.get(weight)), g.parameter(store.get(bias)));
}

TwoLayerMlp TwoLayerMlp::create(ParameterStore& store, const std::string& prefix, std::size_t in,
                                std::size_t hidden, std::size_t out, Rng& rng) {
  TwoLayerMlp m;
  m.first = LinearParams::create(store, prefix + ".0", in, hidden, rng);
  m.second = LinearParams::create(store, prefix + ".1", hidden, out, rng);
  return m;
}

Var TwoLayerMlp::forward(Graph& g, ParameterStore& store, Var x) const {
  return second.forward(g, store, relu(first.forward(g, store, x)));
}

}  // namespace cd::ad
