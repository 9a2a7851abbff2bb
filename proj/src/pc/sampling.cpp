#include "pc/sampling.hpp"

#include <limits>
#include <string>
#include <tuple>

#include "common/errors.hpp"
#include "common/random.hpp"

namespace cd::pc {

std::vector<Index> farthest_point_sample_from(std::span<const Vec3> points, std::size_t m,
                                              Index start) {
  const std::size_t n = points.size();
  if (m == 0) throw DataError("farthest_point_sample: m must be >= 1");
  if (m > n) {
    throw DataError("farthest_point_sample: m = " + std::to_string(m) + " exceeds N = " +
                    std::to_string(n));
  }
  if (start >= n) throw DataError("farthest_point_sample: start index out of range");
  std::vector<Index> chosen;
  chosen.reserve(m);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  Index current = start;
  for (std::size_t s = 0; s < m; ++s) {
    chosen.push_back(current);
    taken[current] = true;
    const Vec3 c = points[current];
    Index best = 0;
    double best_dist = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = squared_distance(points[i], c);
      if (d < min_dist[i]) min_dist[i] = d;
      if (!taken[i] && min_dist[i] > best_dist) {
        best_dist = min_dist[i];
        best = static_cast<Index>(i);
      }
    }
    current = best;
  }
  return chosen;
}

Index seeded_start_index(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return static_cast<Index>(uniform_index(rng, n));
}

std::vector<Index> farthest_point_sample(std::span<const Vec3> points, std::size_t m,
                                         std::uint64_t seed) {
  if (points.empty()) throw DataError("farthest_point_sample: empty cloud");
  return farthest_point_sample_from(points, m, seeded_start_index(points.size(), seed));
}

Index coordinate_pinned_start(std::span<const Vec3> points) {
  if (points.empty()) throw DataError("coordinate_pinned_start: empty cloud");
  Index best = 0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Vec3& p = points[i];
    const Vec3& b = points[best];
    if (std::tie(p.x, p.y, p.z) < std::tie(b.x, b.y, b.z)) best = static_cast<Index>(i);
  }
  return best;
}

}  // namespace cd::pc
