#include "attention/dynamic_graph.hpp"

#include <algorithm>
#include <utility>

#include "common/errors.hpp"
#include "pc/spatial_index.hpp"

namespace cd::attn {

DynamicGraph build_dynamic_graph(const ad::Tensor& features, std::size_t k, std::size_t layer) {
  if (k == 0) throw DataError("build_dynamic_graph: k must be >= 1");
  if (features.rank() != 2 || features.dim(0) == 0) {
    throw ShapeError("build_dynamic_graph: expected non-empty [N x C] features, got " +
                     ad::shape_string(features.shape()));
  }
  const std::size_t n = features.dim(0), c = features.dim(1);
  DynamicGraph g;
  g.layer = layer;
  g.num_points = n;
  g.k = k;
  g.neighbors.resize(n * k);
  const std::size_t others = std::min(k - 1, n - 1);

#pragma omp parallel
  {
    std::vector<std::pair<double, Index>> cand;
    cand.reserve(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      const double* fi = features.data() + i * c;
      cand.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double* fj = features.data() + j * c;
        double d = 0.0;
        for (std::size_t t = 0; t < c; ++t) {
          const double diff = fi[t] - fj[t];
          d += diff * diff;
        }
        cand.emplace_back(d, static_cast<Index>(j));
      }
      std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(others),
                        cand.end());
      Index* row = g.neighbors.data() + i * k;
      row[0] = static_cast<Index>(i);
      for (std::size_t t = 0; t < others; ++t) row[t + 1] = cand[t].second;
      for (std::size_t t = others + 1; t < k; ++t) row[t] = row[others];
    }
  }
  return g;
}

std::vector<Index> coordinate_knn(std::span<const Vec3> queries, std::span<const Vec3> sources,
                                  std::size_t k) {
  if (sources.empty()) throw DataError("coordinate_knn: empty source cloud");
  if (k == 0) throw DataError("coordinate_knn: k must be >= 1");
  const pc::SpatialIndex index = pc::build_index(sources);
  std::vector<Index> out(queries.size() * k);
#pragma omp parallel
  {
    std::vector<Index> row;
#pragma omp for schedule(static)
    for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(queries.size()); ++qi) {
      const auto q = static_cast<std::size_t>(qi);
      index.knn_indices(queries[q], k, row);
      std::copy(row.begin(), row.end(), out.begin() + static_cast<std::ptrdiff_t>(q * k));
    }
  }
  return out;
}

DynamicGraph coordinate_graph(std::span<const Vec3> points, std::size_t k, std::size_t layer) {
  DynamicGraph g;
  g.layer = layer;
  g.num_points = points.size();
  g.k = k;
  g.neighbors = coordinate_knn(points, points, k);
  return g;
}

ad::Tensor coords_tensor(std::span<const Vec3> points) {
  ad::Tensor t({points.size(), 3});
  for (std::size_t i = 0; i < points.size(); ++i) {
    t[3 * i] = points[i].x;
    t[3 * i + 1] = points[i].y;
    t[3 * i + 2] = points[i].z;
  }
  return t;
}

}  // namespace cd::attn
