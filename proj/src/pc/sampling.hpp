#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "common/vec3.hpp"

namespace cd::pc {

// Greedy maximin subset of m indices starting from `start`. Each step picks
// the point with the largest distance to the chosen set, lowest index on ties.
std::vector<Index> farthest_point_sample_from(std::span<const Vec3> points, std::size_t m,
                                              Index start);

// Start index drawn uniformly from mt19937_64(seed).
std::vector<Index> farthest_point_sample(std::span<const Vec3> points, std::size_t m,
                                         std::uint64_t seed);

Index seeded_start_index(std::size_t n, std::uint64_t seed);

// Start index that depends only on coordinates: the lexicographically smallest
// (x, y, z) point, lowest index on exact duplicates. Makes sampling invariant
// under input permutation.
Index coordinate_pinned_start(std::span<const Vec3> points);

}  // namespace cd::pc
