#include "attention/layers.hpp"

#include "ad/ops.hpp"
#include "common/errors.hpp"

namespace cd::attn {

using ad::Graph;
using ad::ParameterStore;
using ad::Tensor;
using ad::Var;

AttentionParams AttentionParams::create(ParameterStore& store, const std::string& prefix,
                                        std::size_t channels, Rng& rng) {
  AttentionParams p;
  p.channels = channels;
  p.query = ad::LinearParams::create(store, prefix + ".query", channels, channels, rng);
  p.key = ad::LinearParams::create(store, prefix + ".key", channels, channels, rng);
  p.value = ad::LinearParams::create(store, prefix + ".value", channels, channels, rng);
  p.mapping = ad::TwoLayerMlp::create(store, prefix + ".mapping", channels, channels, channels, rng);
  p.position = ad::TwoLayerMlp::create(store, prefix + ".position", 3, channels, channels, rng);
  return p;
}

std::vector<std::string> AttentionParams::parameter_names() const {
  return {query.weight,          query.bias,          key.weight,
          key.bias,              value.weight,        value.bias,
          mapping.first.weight,  mapping.first.bias,  mapping.second.weight,
          mapping.second.bias,   position.first.weight, position.first.bias,
          position.second.weight, position.second.bias};
}

EdgeConvParams EdgeConvParams::create(ParameterStore& store, const std::string& prefix,
                                      std::size_t in_channels, std::size_t out_channels,
                                      Rng& rng) {
  return {ad::LinearParams::create(store, prefix, 2 * in_channels, out_channels, rng)};
}

Var attention_normalize(Var logits) {
  if (logits.shape().size() != 3) {
    throw ShapeError("attention_normalize: expected [M x k x C], got " +
                     ad::shape_string(logits.shape()));
  }
  return ad::l1_normalize(ad::softmax(logits, 1), 1);
}

Tensor attention_normalize_values(const Tensor& logits) {
  return ad::l1_normalize_values(ad::softmax_values(logits, 1), 1);
}

Var position_encoding(Graph& g, ParameterStore& store, const AttentionParams& p, Var offsets) {
  return p.position.forward(g, store, offsets);
}

namespace {

std::vector<Index> repeat_each(std::size_t m, std::size_t k) {
  std::vector<Index> out(m * k);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] = static_cast<Index>(i);
  }
  return out;
}

void check_neighbors(const char* op, std::span<const Index> neighbors, std::size_t m,
                     std::size_t k) {
  if (k == 0 || neighbors.size() != m * k) {
    throw ShapeError(std::string(op) + ": " + std::to_string(neighbors.size()) +
                     " neighbor entries for " + std::to_string(m) + " points with k=" +
                     std::to_string(k));
  }
}

}  // namespace

Var edge_conv(Graph& g, ParameterStore& store, const EdgeConvParams& p, Var centers, Var source,
              std::span<const Index> neighbors, std::size_t k) {
  const std::size_t m = centers.shape().at(0);
  check_neighbors("edge_conv", neighbors, m, k);
  if (centers.shape().size() != 2 || source.shape().size() != 2 ||
      centers.shape()[1] != source.shape()[1]) {
    throw ShapeError("edge_conv: centers " + ad::shape_string(centers.shape()) + " vs source " +
                     ad::shape_string(source.shape()));
  }
  const Var xi = ad::gather_rows(centers, repeat_each(m, k));
  const Var xj = ad::gather_rows(source, std::vector<Index>(neighbors.begin(), neighbors.end()));
  const Var parts[] = {xi, ad::sub(xj, xi)};
  const Var h = ad::relu(p.edge.forward(g, store, ad::concat(parts, 1)));
  return ad::reduce_max(ad::reshape(h, {m, k, p.edge.out}), 1);
}

Var edge_conv(Graph& g, ParameterStore& store, const EdgeConvParams& p, Var features,
              const DynamicGraph& graph) {
  return edge_conv(g, store, p, features, features, graph.neighbors, graph.k);
}

Var vector_attention(Graph& g, ParameterStore& store, const AttentionParams& p,
                     Var query_features, std::span<const Vec3> query_coords,
                     Var source_features, std::span<const Vec3> source_coords,
                     std::span<const Index> neighbors, std::size_t k, AttentionTrace* trace) {
  const std::size_t m = query_coords.size();
  const std::size_t c = p.channels;
  check_neighbors("vector_attention", neighbors, m, k);
  if (query_features.shape() != ad::Shape{m, c} ||
      source_features.shape() != ad::Shape{source_coords.size(), c}) {
    throw ShapeError("vector_attention: query " + ad::shape_string(query_features.shape()) +
                     ", source " + ad::shape_string(source_features.shape()) + ", expected width " +
                     std::to_string(c));
  }
  const std::vector<Index> self_rows = repeat_each(m, k);
  const std::vector<Index> nbr(neighbors.begin(), neighbors.end());

  Tensor offsets({m * k, 3});
  for (std::size_t e = 0; e < m * k; ++e) {
    const Vec3 d = query_coords[self_rows[e]] - source_coords[nbr[e]];
    offsets[3 * e] = d.x;
    offsets[3 * e + 1] = d.y;
    offsets[3 * e + 2] = d.z;
  }
  const Var pos = position_encoding(g, store, p, g.constant(std::move(offsets)));

  const Var q = ad::gather_rows(p.query.forward(g, store, query_features), self_rows);
  const Var key = ad::gather_rows(p.key.forward(g, store, source_features), nbr);
  const Var val = ad::gather_rows(p.value.forward(g, store, source_features), nbr);

  const Var relation = ad::add(ad::sub(q, key), pos);
  const Var logits = ad::reshape(p.mapping.forward(g, store, relation), {m, k, c});
  const Var weights = attention_normalize(logits);
  if (trace) trace->weights = weights.value();
  const Var values = ad::reshape(ad::add(val, pos), {m, k, c});
  const Var y = ad::reduce_sum(ad::mul(weights, values), 1);
  return ad::add(query_features, y);
}

Var self_transformer_on_graph(Graph& g, ParameterStore& store, const AttentionParams& p,
                              Var features, std::span<const Vec3> coords,
                              const DynamicGraph& graph, AttentionTrace* trace) {
  if (graph.num_points != coords.size()) {
    throw ShapeError("self_transformer_layer: graph over " + std::to_string(graph.num_points) +
                     " points, coords for " + std::to_string(coords.size()));
  }
  return vector_attention(g, store, p, features, coords, features, coords, graph.neighbors,
                          graph.k, trace);
}

Var self_transformer_layer(Graph& g, ParameterStore& store, const AttentionParams& p,
                           Var features, std::span<const Vec3> coords, std::size_t k,
                           const DynamicGraph* frozen, DynamicGraph* built,
                           AttentionTrace* trace) {
  DynamicGraph graph = frozen ? *frozen : build_dynamic_graph(features.value(), k);
  Var out = self_transformer_on_graph(g, store, p, features, coords, graph, trace);
  if (built) *built = std::move(graph);
  return out;
}

Var cross_transformer_layer(Graph& g, ParameterStore& store, const AttentionParams& p,
                            Var features_a, std::span<const Vec3> coords_a, Var features_b,
                            std::span<const Vec3> coords_b, std::size_t k,
                            AttentionTrace* trace) {
  if (coords_a.empty() || coords_b.empty()) {
    throw DataError("cross_transformer_layer: both clouds must be non-empty");
  }
  const std::vector<Index> nbr = coordinate_knn(coords_a, coords_b, k);
  return vector_attention(g, store, p, features_a, coords_a, features_b, coords_b, nbr, k, trace);
}

}  // namespace cd::attn
