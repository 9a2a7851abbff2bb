#pragma once

#include <span>
#include <vector>

#include "ad/tensor.hpp"
#include "common/vec3.hpp"

namespace cd::attn {

// Directed k-NN graph over one layer's points: row i lists k neighbor indices.
struct DynamicGraph {
  std::size_t layer = 0;
  std::size_t num_points = 0;
  std::size_t k = 0;
  std::vector<Index> neighbors;  // num_points * k, row-major

  std::span<const Index> row(std::size_t i) const { return {neighbors.data() + i * k, k}; }
};

// k nearest points of every row of `features` [N x C] under Euclidean
// distance in feature space. The point itself is always the first neighbor;
// the rest follow by ascending (distance, index). With N < k the last
// neighbor is repeated.
DynamicGraph build_dynamic_graph(const ad::Tensor& features, std::size_t k, std::size_t layer = 0);

// For each query point, the k nearest source points in coordinate space,
// ordered by (distance, index), padded by repetition when the source is small.
std::vector<Index> coordinate_knn(std::span<const Vec3> queries, std::span<const Vec3> sources,
                                  std::size_t k);

// Same, over a single cloud: used where the self layer runs on a coordinate graph.
DynamicGraph coordinate_graph(std::span<const Vec3> points, std::size_t k, std::size_t layer = 0);

ad::Tensor coords_tensor(std::span<const Vec3> points);

}  // namespace cd::attn
