#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "common/vec3.hpp"

namespace cd::pc {

inline constexpr Index kNoQueryIndex = std::numeric_limits<Index>::max();

// k neighbors in ascending (squared distance, index) order. When the indexed
// cloud holds fewer than k points the last valid neighbor is repeated.
struct NeighborList {
  Index query = kNoQueryIndex;
  std::vector<Index> indices;
  std::vector<double> sq_distances;
};

// Static kd-tree over one cloud's coordinates. Immutable after construction;
// concurrent queries are safe.
class SpatialIndex {
 public:
  explicit SpatialIndex(PointSet points, std::string source_id = {});

  std::size_t size() const noexcept { return points_.size(); }
  const PointSet& points() const noexcept { return points_; }
  const std::string& source_id() const noexcept { return source_id_; }

  NeighborList knn(const Vec3& query, std::size_t k) const;
  // Same as knn() but only fills indices; used in hot loops.
  void knn_indices(const Vec3& query, std::size_t k, std::vector<Index>& out) const;
  Index nearest(const Vec3& query) const;
  // All points with squared distance <= radius_sq, ascending index order.
  std::vector<Index> radius(const Vec3& query, double radius_sq) const;

 private:
  struct Node {
    // Leaf when axis < 0: [begin, end) indexes order_.
    int axis = -1;
    double split = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  template <typename Visitor>
  void search(std::uint32_t node, const Vec3& q, Visitor& visitor) const;

  PointSet points_;
  std::string source_id_;
  std::vector<Index> order_;
  std::vector<Node> nodes_;
};

SpatialIndex build_index(std::span<const Vec3> points, std::string source_id = {});

// Reference implementation used by tests and as a fallback for tiny clouds.
NeighborList brute_force_knn(std::span<const Vec3> points, const Vec3& query, std::size_t k);

// Pads `indices` / `sq_distances` to length k by repeating the last entry.
void pad_neighbors(NeighborList& list, std::size_t k);

}  // namespace cd::pc
