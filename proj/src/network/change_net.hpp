#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ad/graph.hpp"
#include "ad/linear.hpp"
#include "attention/dynamic_graph.hpp"
#include "attention/layers.hpp"
#include "common/vec3.hpp"

namespace cd::net {

inline constexpr std::size_t kLevels = 4;
inline constexpr std::size_t kClasses = 2;

struct NetConfig {
  std::array<std::size_t, kLevels> ratios{4, 4, 2, 2};
  std::array<std::size_t, kLevels> channels{32, 64, 128, 256};
  std::size_t group_k = 16;  // set-abstraction grouping
  std::size_t attn_k = 16;   // self-attention dynamic graph
  std::size_t cross_k = 16;  // cross-attention neighborhoods
  std::size_t diff_k = 1;    // feature differencing retrieval
  std::size_t min_points = 64;
  std::uint64_t seed = 1;    // parameter initialization
};

// One set-abstraction level: sample, group, embed by edge convolution, then
// a self-attention layer over a freshly built feature-space graph.
struct EncoderLevel {
  std::size_t ratio = 1;
  std::size_t group_k = 1;
  std::size_t channels = 0;
  attn::EdgeConvParams embed;
  attn::AttentionParams self;
};

// All learnable state. The encoder exists once and is applied to both epochs.
struct ChangeNetWeights {
  NetConfig config;
  ad::ParameterStore store;
  std::vector<EncoderLevel> encoder;
  std::vector<attn::AttentionParams> cross;  // one per level, both directions
  std::vector<ad::LinearParams> decoder;     // [0] = original points ... [kLevels]
  ad::LinearParams head;

  static ChangeNetWeights create(const NetConfig& config);
};

std::size_t level_size(std::size_t previous, std::size_t ratio);

struct PyramidLevel {
  PointSet coords;
  ad::Var features;
  // Index of each point in the previous level (identity for level 0).
  std::vector<Index> provenance;
};

// levels[0] is the input cloud with its coordinates as features.
struct PyramidFeatures {
  std::vector<PyramidLevel> levels;
};

// Feature-space graphs are the only parameter-dependent selections; freezing
// them makes the forward pass a smooth function of the weights.
struct Selections {
  std::vector<attn::DynamicGraph> graphs;
};

struct ForwardOptions {
  const Selections* frozen = nullptr;
  Selections* record = nullptr;
};

PyramidFeatures encode(ad::Graph& g, ChangeNetWeights& w, std::span<const Vec3> cloud,
                       const Selections* frozen = nullptr, std::size_t frozen_offset = 0,
                       Selections* record = nullptr);

// d_i = feat_a(i) - mean of feat_b over the k coordinate-nearest B points.
ad::Var feature_difference(ad::Var features_a, std::span<const Vec3> coords_a,
                           ad::Var features_b, std::span<const Vec3> coords_b, std::size_t k = 1);

struct FusedLevel {
  ad::Var a;
  ad::Var b;
};

// a' = cross(a <- b), b' = cross(b <- a) with the level's shared parameters.
FusedLevel fuse_cross(ad::Graph& g, ChangeNetWeights& w, std::size_t level,
                      const PyramidLevel& a, const PyramidLevel& b);

// Inverse-distance weights 1/(d^2 + 1e-8) over the min(3, N_coarse) nearest
// coarse points. A fine point that coincides with a coarse point takes that
// point's feature exactly.
struct InterpolationPlan {
  std::size_t k = 0;
  std::vector<Index> indices;
  std::vector<double> weights;
};
InterpolationPlan plan_interpolation(std::span<const Vec3> fine, std::span<const Vec3> coarse);
ad::Var interpolate(ad::Var coarse_features, const InterpolationPlan& plan);

// skips[l]: concatenated skip features of `pyramid` level l, l = 0..kLevels.
ad::Var decode(ad::Graph& g, ChangeNetWeights& w, const PyramidFeatures& pyramid,
               std::span<const ad::Var> skips);

struct ForwardResult {
  ad::Var logits;  // [N_T2 x 2]
  PyramidFeatures pyramid_t1;
  PyramidFeatures pyramid_t2;
  std::vector<FusedLevel> fused;     // index l-1 for level l; .a = T2, .b = T1
  std::vector<ad::Var> differences;  // index l for level l, on T2 points
};

// Change logits on the T2 cloud.
ForwardResult forward(ad::Graph& g, ChangeNetWeights& w, std::span<const Vec3> cloud_t1,
                      std::span<const Vec3> cloud_t2, const ForwardOptions& options = {});

}  // namespace cd::net
