#pragma once

#include <functional>
#include <string>
#include <vector>

namespace cd::net {

struct GradientCheckOutcome {
  std::string name;
  double max_relative_error = 0.0;
  double tolerance = 0.0;
  std::size_t probes = 0;
  double seconds = 0.0;
  bool passed() const { return max_relative_error < tolerance; }
};

// Central-difference checks (epsilon 1e-5) of every primitive (tolerance
// 1e-6), the edge-conv, self and cross layers, and the full network on a
// 64-point pair (tolerance 1e-4) with discrete selections frozen.
std::vector<GradientCheckOutcome> run_gradient_suite(
    const std::function<void(const GradientCheckOutcome&)>& on_result = {});

}  // namespace cd::net
