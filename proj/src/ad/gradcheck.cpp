#include "ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/random.hpp"

namespace cd::ad {

GradCheckResult finite_diff_check(const LossBuilder& loss, ParameterStore& params,
                                  const GradCheckOptions& options) {
  params.zero_grad();
  {
    Graph g;
    Var l = loss(g, params);
    g.backward(l);
  }
  GradCheckResult result;
  Rng rng(options.seed);
  for (auto& [name, p] : params) {
    const Tensor analytic = p.grad;
    std::vector<std::size_t> probes(p.value.size());
    std::iota(probes.begin(), probes.end(), std::size_t{0});
    if (options.max_probes_per_tensor && probes.size() > options.max_probes_per_tensor) {
      for (std::size_t i = probes.size() - 1; i > 0; --i) {
        std::swap(probes[i], probes[uniform_index(rng, i + 1)]);
      }
      probes.resize(options.max_probes_per_tensor);
    }
    for (std::size_t idx : probes) {
      const double original = p.value[idx];
      p.value[idx] = original + options.epsilon;
      double plus = 0.0;
      {
        Graph g;
        plus = loss(g, params).value().item();
      }
      p.value[idx] = original - options.epsilon;
      double minus = 0.0;
      {
        Graph g;
        minus = loss(g, params).value().item();
      }
      p.value[idx] = original;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double err = std::abs(analytic[idx] - numeric) / std::max(1.0, std::abs(numeric));
      ++result.probes;
      if (err > result.max_relative_error || !std::isfinite(err)) {
        result.max_relative_error = std::isfinite(err) ? err : INFINITY;
        result.worst_parameter = name;
        result.worst_index = idx;
      }
    }
  }
  return result;
}

}  // namespace cd::ad
