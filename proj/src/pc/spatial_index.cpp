#include "pc/spatial_index.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

#include "common/errors.hpp"

namespace cd::pc {

namespace {

constexpr std::uint32_t kLeafSize = 12;

struct Candidate {
  double sq_dist;
  Index index;
  bool operator<(const Candidate& o) const {
    return sq_dist < o.sq_dist || (sq_dist == o.sq_dist && index < o.index);
  }
};

// Bounded max-heap of the best k candidates under (distance, index) order.
class KnnCollector {
 public:
  explicit KnnCollector(std::size_t k) : k_(k) { heap_.reserve(k + 1); }

  double bound() const {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.front().sq_dist;
  }
  void offer(double d, Index i) {
    Candidate c{d, i};
    if (heap_.size() < k_) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }
  std::vector<Candidate> sorted() {
    std::sort_heap(heap_.begin(), heap_.end());
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Candidate> heap_;
};

}  // namespace

SpatialIndex::SpatialIndex(PointSet points, std::string source_id)
    : points_(std::move(points)), source_id_(std::move(source_id)) {
  if (points_.empty()) throw DataError("cannot build a spatial index over an empty cloud");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), Index{0});
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Vec3& p = points_[order_[i]];
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
  }
  const Vec3 ext = hi - lo;
  int axis = 0;
  if (ext.y > ext[axis]) axis = 1;
  if (ext.z > ext[axis]) axis = 2;
  if (ext[axis] == 0.0) {
    // All points coincide; splitting cannot separate them.
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](Index a, Index b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Left subtree holds coordinates <= split, right subtree >= split.
template <typename Visitor>
void SpatialIndex::search(std::uint32_t node_id, const Vec3& q, Visitor& visitor) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Index idx = order_[i];
      visitor.offer(squared_distance(points_[idx], q), idx);
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  const std::uint32_t near = delta <= 0.0 ? node.left : node.right;
  const std::uint32_t far = delta <= 0.0 ? node.right : node.left;
  search(near, q, visitor);
  // Equal distances must still be visited: a tie may carry a lower index.
  if (delta * delta <= visitor.bound()) search(far, q, visitor);
}

NeighborList SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  if (k == 0) throw DataError("knn: k must be >= 1");
  KnnCollector collector(std::min(k, points_.size()));
  search(0, query, collector);
  NeighborList out;
  for (const Candidate& c : collector.sorted()) {
    out.indices.push_back(c.index);
    out.sq_distances.push_back(c.sq_dist);
  }
  pad_neighbors(out, k);
  return out;
}

void SpatialIndex::knn_indices(const Vec3& query, std::size_t k, std::vector<Index>& out) const {
  KnnCollector collector(std::min(k, points_.size()));
  search(0, query, collector);
  out.clear();
  for (const Candidate& c : collector.sorted()) out.push_back(c.index);
  while (out.size() < k) out.push_back(out.back());
}

Index SpatialIndex::nearest(const Vec3& query) const {
  KnnCollector collector(1);
  search(0, query, collector);
  return collector.sorted().front().index;
}

std::vector<Index> SpatialIndex::radius(const Vec3& query, double radius_sq) const {
  struct RadiusCollector {
    double r2;
    std::vector<Index> hits;
    double bound() const { return r2; }
    void offer(double d, Index i) {
      if (d <= r2) hits.push_back(i);
    }
  } collector{radius_sq, {}};
  search(0, query, collector);
  std::sort(collector.hits.begin(), collector.hits.end());
  return std::move(collector.hits);
}

SpatialIndex build_index(std::span<const Vec3> points, std::string source_id) {
  return SpatialIndex(PointSet(points.begin(), points.end()), std::move(source_id));
}

NeighborList brute_force_knn(std::span<const Vec3> points, const Vec3& query, std::size_t k) {
  if (points.empty()) throw DataError("knn over an empty cloud");
  std::vector<Candidate> all;
  all.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    all.push_back({squared_distance(points[i], query), static_cast<Index>(i)});
  }
  std::sort(all.begin(), all.end());
  NeighborList out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) {
    out.indices.push_back(all[i].index);
    out.sq_distances.push_back(all[i].sq_dist);
  }
  pad_neighbors(out, k);
  return out;
}

void pad_neighbors(NeighborList& list, std::size_t k) {
  while (list.indices.size() < k) {
    list.indices.push_back(list.indices.back());
    list.sq_distances.push_back(list.sq_distances.back());
  }
}

}  // namespace cd::pc
