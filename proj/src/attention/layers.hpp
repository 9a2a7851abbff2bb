#pragma once

#include <span>
#include <string>
#include <vector>

#include "ad/graph.hpp"
#include "ad/linear.hpp"
#include "attention/dynamic_graph.hpp"

namespace cd::attn {

// Learnable maps of one vector-attention layer of width C:
//   query/key/value  point-wise C -> C transforms
//   mapping          C -> C -> C, ReLU between (turns relations into weights)
//   position         3 -> C -> C, ReLU between (offset encoding)
struct AttentionParams {
  ad::LinearParams query;
  ad::LinearParams key;
  ad::LinearParams value;
  ad::TwoLayerMlp mapping;
  ad::TwoLayerMlp position;
  std::size_t channels = 0;

  static AttentionParams create(ad::ParameterStore& store, const std::string& prefix,
                                std::size_t channels, Rng& rng);
  std::vector<std::string> parameter_names() const;
};

// Shared edge MLP of an edge convolution: Linear(2*C_in -> C_out) + ReLU.
struct EdgeConvParams {
  ad::LinearParams edge;

  static EdgeConvParams create(ad::ParameterStore& store, const std::string& prefix,
                               std::size_t in_channels, std::size_t out_channels, Rng& rng);
};

// Optional capture of post-normalization weights [M x k x C] for inspection.
struct AttentionTrace {
  ad::Tensor weights;
};

// Per channel, over the neighbor axis of logits [M x k x C]: softmax followed
// by division by the L1 norm.
ad::Var attention_normalize(ad::Var logits);
ad::Tensor attention_normalize_values(const ad::Tensor& logits);

// offsets [E x 3] -> encodings [E x C].
ad::Var position_encoding(ad::Graph& g, ad::ParameterStore& store, const AttentionParams& p,
                          ad::Var offsets);

// For every center i and its neighbors j (k per center, taken from `source`):
// h_ij = MLP(concat(x_i, x_j - x_i)); out_i = channel-wise max over j.
ad::Var edge_conv(ad::Graph& g, ad::ParameterStore& store, const EdgeConvParams& p,
                  ad::Var centers, ad::Var source, std::span<const Index> neighbors,
                  std::size_t k);
// Convenience form with centers == source and a graph over them.
ad::Var edge_conv(ad::Graph& g, ad::ParameterStore& store, const EdgeConvParams& p,
                  ad::Var features, const DynamicGraph& graph);

// Vector attention with subtraction relation and residual output:
//   y_i = sum_j rho(mapping(q(x_i) - k(s_j) + pos_ij)) * (v(s_j) + pos_ij)
//   out_i = x_i + y_i,  pos_ij = position(p_i - p_j)
// Queries come from (query_features, query_coords); keys and values from
// (source_features, source_coords) through `neighbors` (k per query).
ad::Var vector_attention(ad::Graph& g, ad::ParameterStore& store, const AttentionParams& p,
                         ad::Var query_features, std::span<const Vec3> query_coords,
                         ad::Var source_features, std::span<const Vec3> source_coords,
                         std::span<const Index> neighbors, std::size_t k,
                         AttentionTrace* trace = nullptr);

// Self layer over a dynamic graph built from the current features. Pass
// `frozen` to reuse a previously built graph; `built` receives the graph used.
ad::Var self_transformer_layer(ad::Graph& g, ad::ParameterStore& store, const AttentionParams& p,
                               ad::Var features, std::span<const Vec3> coords, std::size_t k,
                               const DynamicGraph* frozen = nullptr,
                               DynamicGraph* built = nullptr, AttentionTrace* trace = nullptr);

// Self layer over an explicit neighbor graph (e.g. coordinate k-NN).
ad::Var self_transformer_on_graph(ad::Graph& g, ad::ParameterStore& store,
                                  const AttentionParams& p, ad::Var features,
                                  std::span<const Vec3> coords, const DynamicGraph& graph,
                                  AttentionTrace* trace = nullptr);

// Queries from cloud A attend over the k coordinate-nearest points of cloud B.
// Returns A's updated features [N_A x C].
ad::Var cross_transformer_layer(ad::Graph& g, ad::ParameterStore& store,
                                const AttentionParams& p, ad::Var features_a,
                                std::span<const Vec3> coords_a, ad::Var features_b,
                                std::span<const Vec3> coords_b, std::size_t k,
                                AttentionTrace* trace = nullptr);

}  // namespace cd::attn
