#include "network/change_net.hpp"

#include <string>

#include "ad/ops.hpp"
#include "common/errors.hpp"
#include "pc/sampling.hpp"

namespace cd::net {

using ad::Graph;
using ad::Var;

ChangeNetWeights ChangeNetWeights::create(const NetConfig& config) {
  for (std::size_t l = 0; l < kLevels; ++l) {
    if (config.ratios[l] == 0 || config.channels[l] == 0) {
      throw ConfigError("network: level ratios and channels must be positive");
    }
  }
  if (config.group_k == 0 || config.attn_k == 0 || config.cross_k == 0 || config.diff_k == 0) {
    throw ConfigError("network: neighborhood sizes must be positive");
  }
  if (config.min_points == 0) throw ConfigError("network: min_points must be positive");

  ChangeNetWeights w;
  w.config = config;
  Rng rng(config.seed);
  std::size_t in_width = 3;
  for (std::size_t l = 0; l < kLevels; ++l) {
    const std::string prefix = "encoder.level" + std::to_string(l + 1);
    EncoderLevel level;
    level.ratio = config.ratios[l];
    level.group_k = config.group_k;
    level.channels = config.channels[l];
    level.embed = attn::EdgeConvParams::create(w.store, prefix + ".embed", in_width,
                                               level.channels, rng);
    level.self = attn::AttentionParams::create(w.store, prefix + ".self", level.channels, rng);
    w.encoder.push_back(std::move(level));
    in_width = config.channels[l] + 3;
  }
  for (std::size_t l = 0; l < kLevels; ++l) {
    w.cross.push_back(attn::AttentionParams::create(
        w.store, "cross.level" + std::to_string(l + 1), config.channels[l], rng));
  }
  // Decoder, coarsest first: level kLevels sees only its skip features.
  w.decoder.resize(kLevels + 1);
  const std::size_t top = config.channels[kLevels - 1];
  w.decoder[kLevels] = ad::LinearParams::create(w.store, "decoder.level" + std::to_string(kLevels),
                                                2 * top, top, rng);
  for (std::size_t l = kLevels - 1; l >= 1; --l) {
    const std::size_t width = config.channels[l - 1];
    w.decoder[l] = ad::LinearParams::create(w.store, "decoder.level" + std::to_string(l),
                                            config.channels[l] + 2 * width, width, rng);
  }
  w.decoder[0] = ad::LinearParams::create(w.store, "decoder.level0", config.channels[0] + 6,
                                          config.channels[0], rng);
  w.head = ad::LinearParams::create(w.store, "head", config.channels[0], kClasses, rng);
  return w;
}

std::size_t level_size(std::size_t previous, std::size_t ratio) {
  return (previous + ratio - 1) / ratio;
}

PyramidFeatures encode(Graph& g, ChangeNetWeights& w, std::span<const Vec3> cloud,
                       const Selections* frozen, std::size_t frozen_offset, Selections* record) {
  if (cloud.size() < w.config.min_points) {
    throw DataError("network: cloud has " + std::to_string(cloud.size()) +
                    " points; at least " + std::to_string(w.config.min_points) + " are required");
  }
  PyramidFeatures pyramid;
  PyramidLevel base;
  base.coords.assign(cloud.begin(), cloud.end());
  base.features = g.constant(attn::coords_tensor(cloud));
  base.provenance.resize(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) base.provenance[i] = static_cast<Index>(i);
  pyramid.levels.push_back(std::move(base));

  for (std::size_t l = 0; l < kLevels; ++l) {
    const EncoderLevel& level = w.encoder[l];
    const PyramidLevel& prev = pyramid.levels.back();
    const std::size_t m = level_size(prev.coords.size(), level.ratio);
    const Index start = pc::coordinate_pinned_start(prev.coords);
    std::vector<Index> sampled = pc::farthest_point_sample_from(prev.coords, m, start);

    PyramidLevel next;
    next.coords.reserve(m);
    for (Index i : sampled) next.coords.push_back(prev.coords[i]);

    Var augmented = prev.features;
    if (l > 0) {
      const Var parts[] = {prev.features, g.constant(attn::coords_tensor(prev.coords))};
      augmented = ad::concat(parts, 1);
    }
    const Var centers = ad::gather_rows(augmented, sampled);
    const std::vector<Index> groups =
        attn::coordinate_knn(next.coords, prev.coords, level.group_k);
    const Var embedded =
        attn::edge_conv(g, w.store, level.embed, centers, augmented, groups, level.group_k);

    const attn::DynamicGraph* frozen_graph = nullptr;
    if (frozen) {
      if (frozen->graphs.size() <= frozen_offset + l) {
        throw Error("network: frozen selections are missing level graphs");
      }
      frozen_graph = &frozen->graphs[frozen_offset + l];
    }
    attn::DynamicGraph built;
    next.features = attn::self_transformer_layer(g, w.store, level.self, embedded, next.coords,
                                                 w.config.attn_k, frozen_graph, &built);
    built.layer = l + 1;
    if (record) record->graphs.push_back(std::move(built));
    next.provenance = std::move(sampled);
    pyramid.levels.push_back(std::move(next));
  }
  return pyramid;
}

Var feature_difference(Var features_a, std::span<const Vec3> coords_a, Var features_b,
                       std::span<const Vec3> coords_b, std::size_t k) {
  if (coords_a.empty() || coords_b.empty()) {
    throw DataError("feature_difference: both levels must be non-empty");
  }
  std::vector<Index> nearest = attn::coordinate_knn(coords_a, coords_b, k);
  Var retrieved;
  if (k == 1) {
    retrieved = ad::gather_rows(features_b, std::move(nearest));
  } else {
    std::vector<double> weights(nearest.size(), 1.0 / static_cast<double>(k));
    retrieved = ad::weighted_gather(features_b, std::move(nearest), std::move(weights), k);
  }
  return ad::sub(features_a, retrieved);
}

FusedLevel fuse_cross(Graph& g, ChangeNetWeights& w, std::size_t level, const PyramidLevel& a,
                      const PyramidLevel& b) {
  if (level == 0 || level > kLevels) throw Error("fuse_cross: level out of range");
  const attn::AttentionParams& p = w.cross[level - 1];
  FusedLevel out;
  out.a = attn::cross_transformer_layer(g, w.store, p, a.features, a.coords, b.features, b.coords,
                                        w.config.cross_k);
  out.b = attn::cross_transformer_layer(g, w.store, p, b.features, b.coords, a.features, a.coords,
                                        w.config.cross_k);
  return out;
}

InterpolationPlan plan_interpolation(std::span<const Vec3> fine, std::span<const Vec3> coarse) {
  if (coarse.empty()) throw DataError("interpolate: empty coarse level");
  InterpolationPlan plan;
  plan.k = std::min<std::size_t>(3, coarse.size());
  plan.indices = attn::coordinate_knn(fine, coarse, plan.k);
  plan.weights.resize(plan.indices.size());
  for (std::size_t i = 0; i < fine.size(); ++i) {
    double* w = plan.weights.data() + i * plan.k;
    const Index* idx = plan.indices.data() + i * plan.k;
    const double d0 = squared_distance(fine[i], coarse[idx[0]]);
    if (d0 == 0.0) {
      w[0] = 1.0;
      for (std::size_t j = 1; j < plan.k; ++j) w[j] = 0.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < plan.k; ++j) {
      w[j] = 1.0 / (squared_distance(fine[i], coarse[idx[j]]) + 1e-8);
      total += w[j];
    }
    for (std::size_t j = 0; j < plan.k; ++j) w[j] /= total;
  }
  return plan;
}

Var interpolate(Var coarse_features, const InterpolationPlan& plan) {
  return ad::weighted_gather(coarse_features, plan.indices, plan.weights, plan.k);
}

Var decode(Graph& g, ChangeNetWeights& w, const PyramidFeatures& pyramid,
           std::span<const Var> skips) {
  if (pyramid.levels.size() != kLevels + 1 || skips.size() != kLevels + 1) {
    throw ShapeError("decode: expected " + std::to_string(kLevels + 1) + " levels and skips");
  }
  Var current = ad::relu(w.decoder[kLevels].forward(g, w.store, skips[kLevels]));
  for (std::size_t l = kLevels; l-- > 0;) {
    const InterpolationPlan plan =
        plan_interpolation(pyramid.levels[l].coords, pyramid.levels[l + 1].coords);
    const Var parts[] = {interpolate(current, plan), skips[l]};
    current = ad::relu(w.decoder[l].forward(g, w.store, ad::concat(parts, 1)));
  }
  return w.head.forward(g, w.store, current);
}

ForwardResult forward(Graph& g, ChangeNetWeights& w, std::span<const Vec3> cloud_t1,
                      std::span<const Vec3> cloud_t2, const ForwardOptions& options) {
  ForwardResult r;
  r.pyramid_t1 = encode(g, w, cloud_t1, options.frozen, 0, options.record);
  r.pyramid_t2 = encode(g, w, cloud_t2, options.frozen, kLevels, options.record);

  const PyramidLevel& base2 = r.pyramid_t2.levels[0];
  const PyramidLevel& base1 = r.pyramid_t1.levels[0];
  r.differences.push_back(feature_difference(base2.features, base2.coords, base1.features,
                                             base1.coords, w.config.diff_k));
  std::vector<Var> skips;
  {
    const Var parts[] = {base2.features, r.differences[0]};
    skips.push_back(ad::concat(parts, 1));
  }
  for (std::size_t l = 1; l <= kLevels; ++l) {
    const PyramidLevel& a = r.pyramid_t2.levels[l];
    const PyramidLevel& b = r.pyramid_t1.levels[l];
    FusedLevel fused = fuse_cross(g, w, l, a, b);
    Var diff = feature_difference(fused.a, a.coords, fused.b, b.coords, w.config.diff_k);
    const Var parts[] = {fused.a, diff};
    skips.push_back(ad::concat(parts, 1));
    r.differences.push_back(diff);
    r.fused.push_back(fused);
  }
  r.logits = decode(g, w, r.pyramid_t2, skips);
  return r;
}

}  // namespace cd::net
