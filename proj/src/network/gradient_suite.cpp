#include "network/gradient_suite.hpp"

#include <chrono>

#include "ad/gradcheck.hpp"
#include "ad/ops.hpp"
#include "attention/layers.hpp"
#include "common/random.hpp"
#include "network/change_net.hpp"

namespace cd::net {

using ad::Graph;
using ad::LossBuilder;
using ad::ParameterStore;
using ad::Tensor;
using ad::Var;

namespace {

Tensor random_tensor(Rng& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = uniform(rng, lo, hi);
  return t;
}

// Magnitudes in [0.05, 1] keep relu and max inputs off their kinks.
Tensor off_kink(Rng& rng, ad::Shape shape) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = (rng() & 1 ? 1.0 : -1.0) * uniform(rng, 0.05, 1.0);
  return t;
}

PointSet random_points(Rng& rng, std::size_t n, double extent) {
  PointSet p(n);
  for (auto& v : p) v = {uniform(rng, 0, extent), uniform(rng, 0, extent), uniform(rng, 0, extent)};
  return p;
}

Var project(Graph& g, Var x, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum_all(ad::mul(x, g.constant(random_tensor(rng, x.shape()))));
}

void perturb(ParameterStore& store, Rng& rng, double scale) {
  for (auto& [name, p] : store)
    for (double& v : p.value.values()) v = uniform(rng, -scale, scale);
}

}  // namespace

std::vector<GradientCheckOutcome> run_gradient_suite(
    const std::function<void(const GradientCheckOutcome&)>& on_result) {
  std::vector<GradientCheckOutcome> out;
  auto run = [&](const std::string& name, ParameterStore& store, const LossBuilder& f,
                 double tolerance, std::size_t probes_per_tensor) {
    const auto start = std::chrono::steady_clock::now();
    ad::GradCheckOptions opt;
    opt.epsilon = 1e-5;
    opt.max_probes_per_tensor = probes_per_tensor;
    const auto r = ad::finite_diff_check(f, store, opt);
    GradientCheckOutcome o{name, r.max_relative_error, tolerance, r.probes,
                           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
    if (on_result) on_result(o);
    out.push_back(o);
  };

  Rng rng(2024);
  ParameterStore prim;
  prim.add("a", off_kink(rng, {4, 3}));
  prim.add("b", off_kink(rng, {4, 3}));
  prim.add("m", random_tensor(rng, {3, 5}));
  prim.add("w", random_tensor(rng, {2, 3}));
  prim.add("bias", random_tensor(rng, {3}));
  prim.add("t3", random_tensor(rng, {2, 4, 3}));
  prim.add("logits", random_tensor(rng, {6, 2}, -3, 3));
  auto P = [](Graph& g, ParameterStore& s, const char* n) { return g.parameter(s.get(n)); };
  const std::vector<std::pair<std::string, LossBuilder>> primitives = {
      {"add", [&](Graph& g, ParameterStore& s) { return project(g, ad::add(P(g, s, "a"), P(g, s, "b")), 1); }},
      {"sub", [&](Graph& g, ParameterStore& s) { return project(g, ad::sub(P(g, s, "a"), P(g, s, "b")), 2); }},
      {"mul", [&](Graph& g, ParameterStore& s) { return project(g, ad::mul(P(g, s, "a"), P(g, s, "b")), 3); }},
      {"scale", [&](Graph& g, ParameterStore& s) { return project(g, ad::scale(P(g, s, "a"), -1.5), 4); }},
      {"relu", [&](Graph& g, ParameterStore& s) { return project(g, ad::relu(P(g, s, "a")), 5); }},
      {"matmul", [&](Graph& g, ParameterStore& s) { return project(g, ad::matmul(P(g, s, "a"), P(g, s, "m")), 6); }},
      {"add_bias", [&](Graph& g, ParameterStore& s) { return project(g, ad::add_bias(P(g, s, "a"), P(g, s, "bias")), 7); }},
      {"linear", [&](Graph& g, ParameterStore& s) {
         return project(g, ad::linear(P(g, s, "a"), P(g, s, "w"), ad::reshape(ad::gather_rows(P(g, s, "bias"), {0, 2}), {2})), 8);
       }},
      {"softmax", [&](Graph& g, ParameterStore& s) { return project(g, ad::softmax(P(g, s, "t3"), 1), 9); }},
      {"l1_normalize", [&](Graph& g, ParameterStore& s) { return project(g, ad::l1_normalize(ad::softmax(P(g, s, "t3"), 2), 1), 10); }},
      {"gather_rows", [&](Graph& g, ParameterStore& s) { return project(g, ad::gather_rows(P(g, s, "a"), {3, 0, 0, 2}), 11); }},
      {"scatter_add_rows", [&](Graph& g, ParameterStore& s) { return project(g, ad::scatter_add_rows(P(g, s, "a"), {1, 1, 0, 4}, 5), 12); }},
      {"weighted_gather", [&](Graph& g, ParameterStore& s) {
         return project(g, ad::weighted_gather(P(g, s, "a"), {0, 1, 3, 2}, {0.25, 0.75, 1.5, -0.5}, 2), 13);
       }},
      {"reduce_sum", [&](Graph& g, ParameterStore& s) { return project(g, ad::reduce_sum(P(g, s, "t3"), 1), 14); }},
      {"reduce_mean", [&](Graph& g, ParameterStore& s) { return project(g, ad::reduce_mean(P(g, s, "t3"), 2), 15); }},
      {"reduce_max", [&](Graph& g, ParameterStore& s) { return project(g, ad::reduce_max(P(g, s, "t3"), 1), 16); }},
      {"concat", [&](Graph& g, ParameterStore& s) {
         const Var parts[] = {P(g, s, "a"), P(g, s, "b")};
         return project(g, ad::concat(parts, 1), 17);
       }},
      {"reshape", [&](Graph& g, ParameterStore& s) { return project(g, ad::reshape(P(g, s, "t3"), {8, 3}), 18); }},
      {"softmax_cross_entropy", [&](Graph& g, ParameterStore& s) {
         static const std::uint8_t labels[] = {0, 1, 1, 0, 1, 0};
         static const double weights[] = {1.0, 2.5};
         return ad::softmax_cross_entropy(P(g, s, "logits"), labels, weights);
       }},
  };
  for (const auto& [name, f] : primitives) run("primitive." + name, prim, f, 1e-6, 0);

  // Layers with graphs recorded once and replayed during the probes.
  {
    const std::size_t n = 12, c = 4, k = 4;
    ParameterStore store;
    const auto edge = attn::EdgeConvParams::create(store, "edge", 3, c, rng);
    const auto self = attn::AttentionParams::create(store, "self", c, rng);
    const auto cross = attn::AttentionParams::create(store, "cross", c, rng);
    perturb(store, rng, 0.5);
    store.add("input", random_tensor(rng, {n, 3}));
    store.add("features", random_tensor(rng, {n, c}));
    store.add("other", random_tensor(rng, {9, c}));
    const PointSet pts = random_points(rng, n, 2.0);
    const PointSet other_pts = random_points(rng, 9, 2.0);
    const attn::DynamicGraph edge_graph = attn::build_dynamic_graph(store.get("input").value, k);
    const attn::DynamicGraph self_graph = attn::build_dynamic_graph(store.get("features").value, k);

    run("layer.edge_conv", store, [&](Graph& g, ParameterStore& s) {
      return project(g, attn::edge_conv(g, s, edge, g.parameter(s.get("input")), edge_graph), 21);
    }, 1e-4, 0);
    run("layer.self_transformer", store, [&](Graph& g, ParameterStore& s) {
      return project(g, attn::self_transformer_layer(g, s, self, g.parameter(s.get("features")), pts, k,
                                                     &self_graph), 22);
    }, 1e-4, 0);
    run("layer.cross_transformer", store, [&](Graph& g, ParameterStore& s) {
      return project(g, attn::cross_transformer_layer(g, s, cross, g.parameter(s.get("features")), pts,
                                                      g.parameter(s.get("other")), other_pts, 3), 23);
    }, 1e-4, 0);
  }

  // Whole network on a 64-point pair.
  {
    NetConfig cfg;
    cfg.channels = {4, 6, 8, 8};
    cfg.group_k = 4;
    cfg.attn_k = 4;
    cfg.cross_k = 3;
    cfg.min_points = 64;
    cfg.seed = 5;
    ChangeNetWeights w = ChangeNetWeights::create(cfg);
    for (auto& [name, p] : w.store)
      if (name.ends_with(".bias")) for (double& v : p.value.values()) v = uniform(rng, -0.2, 0.2);
    const PointSet t1 = random_points(rng, 64, 2.0);
    const PointSet t2 = random_points(rng, 64, 2.0);
    std::vector<std::uint8_t> labels(64);
    for (std::size_t i = 0; i < 64; ++i) labels[i] = t2[i].z > 1.0;
    static const double class_weights[] = {1.0, 1.5};
    Selections frozen;
    {
      Graph g;
      ForwardOptions opt;
      opt.record = &frozen;
      forward(g, w, t1, t2, opt);
    }
    run("network.end_to_end_64", w.store, [&](Graph& g, ParameterStore&) {
      ForwardOptions opt;
      opt.frozen = &frozen;
      return ad::softmax_cross_entropy(forward(g, w, t1, t2, opt).logits, labels, class_weights);
    }, 1e-4, 8);
  }
  return out;
}

}  // namespace cd::net
