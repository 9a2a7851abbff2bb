#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ad/graph.hpp"
#include "ad/parameters.hpp"

namespace cd::ad {

// Builds the scalar loss on a fresh graph from the current parameter values.
using LossBuilder = std::function<Var(Graph&, ParameterStore&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Probe at most this many coordinates per parameter tensor (0 = all),
  // chosen by a seeded shuffle.
  std::size_t max_probes_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t probes = 0;
};

// max over probed coordinates of |analytic - central difference| / max(1, |central difference|).
GradCheckResult finite_diff_check(const LossBuilder& loss, ParameterStore& params,
                                  const GradCheckOptions& options = {});

}  // namespace cd::ad
