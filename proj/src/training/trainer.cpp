#include "training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "ad/checkpoint.hpp"
#include "ad/ops.hpp"
#include "common/errors.hpp"
#include "common/random.hpp"
#include "config/run_config.hpp"
#include "pc/sampling.hpp"

namespace cd::train {

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  for (const auto& e : config::parse_entries(pc::read_text_file(path), path.string())) {
    out[e.key] = e.value;
  }
  return out;
}

}  // namespace

std::vector<ScenePair> load_scene_set(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.txt";
  if (!std::filesystem::exists(manifest_path)) {
    throw DataError(manifest_path.string() + ": scene manifest not found");
  }
  std::map<std::string, std::string> kv;
  try {
    kv = read_key_values(manifest_path);
  } catch (const ConfigError& e) {
    throw DataError(e.what());
  }
  std::vector<ScenePair> scenes;
  for (const auto& [key, value] : kv) {
    if (!key.ends_with(".t1") || key.starts_with("scene.")) continue;
    const std::string id = key.substr(0, key.size() - 3);
    const auto t2 = kv.find(id + ".t2");
    const auto split = kv.find(id + ".split");
    if (t2 == kv.end() || split == kv.end()) {
      throw DataError(manifest_path.string() + ": scene " + id + " lacks t2 or split entries");
    }
    ScenePair p;
    p.id = id;
    p.split = split->second;
    if (p.split != "train" && p.split != "test") {
      throw DataError(manifest_path.string() + ": scene " + id + " has unknown split " + p.split);
    }
    p.t1 = pc::load_cloud(dir / value, pc::CloudFormat::Xyz, pc::Epoch::T1).points();
    const auto c2 = pc::load_cloud(dir / t2->second, pc::CloudFormat::Xyzl, pc::Epoch::T2);
    p.t2 = c2.points();
    p.labels = c2.labels();
    if (p.t1.empty() || p.t2.empty()) throw DataError("scene " + id + " has an empty epoch");
    scenes.push_back(std::move(p));
  }
  if (scenes.empty()) throw DataError(manifest_path.string() + ": no scenes listed");
  return scenes;
}

IndexedPair::IndexedPair(const ScenePair& p)
    : pair(&p), t1(p.t1, p.id + "_t1"), t2(p.t2, p.id + "_t2") {
  for (std::size_t i = 0; i < p.labels.size(); ++i)
    if (p.labels[i]) changed.push_back(static_cast<Index>(i));
}

Vec3 sample_crop_center(const IndexedPair& scene, Rng& rng, double change_focus) {
  const ScenePair& s = *scene.pair;
  const bool focus = uniform01(rng) < change_focus;
  if (focus && !scene.changed.empty()) {
    return s.t2[scene.changed[uniform_index(rng, scene.changed.size())]];
  }
  return s.t2[uniform_index(rng, s.t2.size())];
}

void rotate_crop(Crop& crop, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  for (PointSet* cloud : {&crop.t1, &crop.t2})
    for (Vec3& p : *cloud) p = {c * p.x - s * p.y, s * p.x + c * p.y, p.z};
}

Crop make_crop(const IndexedPair& scene, const Vec3& center, std::size_t chunk,
               std::size_t min_points) {
  const ScenePair& s = *scene.pair;
  Crop c;
  c.center = center;
  const std::size_t n2 = std::min(chunk, s.t2.size());
  const pc::NeighborList near2 = scene.t2.knn(center, n2);
  const double r2 = near2.sq_distances.back();
  c.t2_source = near2.indices;

  std::vector<Index> idx1 = scene.t1.radius(center, r2);
  const std::size_t lo = std::min(s.t1.size(), min_points);
  const std::size_t hi = std::min(s.t1.size(), 2 * chunk);
  if (idx1.size() < lo) {
    idx1 = scene.t1.knn(center, lo).indices;
  } else if (idx1.size() > hi) {
    idx1 = scene.t1.knn(center, hi).indices;
  }
  c.t1.reserve(idx1.size());
  for (Index i : idx1) c.t1.push_back(s.t1[i] - center);
  c.t2.reserve(n2);
  c.labels.reserve(n2);
  for (Index i : c.t2_source) {
    c.t2.push_back(s.t2[i] - center);
    c.labels.push_back(s.labels[i]);
  }
  return c;
}

std::array<double, 2> inverse_frequency_weights(std::span<const ScenePair> scenes) {
  std::array<double, 2> count{0, 0};
  for (const auto& s : scenes)
    for (pc::Label l : s.labels) count[l ? 1 : 0] += 1.0;
  const double total = count[0] + count[1];
  std::array<double, 2> w{1.0, 1.0};
  for (int c = 0; c < 2; ++c)
    if (count[c] > 0) w[c] = total / (2.0 * count[c]);
  return w;
}

void Optimizer::step(ad::ParameterStore& store) {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  double lr = cfg_.lr;
  const double total = static_cast<double>(cfg_.epochs * cfg_.steps_per_epoch);
  if (cfg_.schedule == LrSchedule::Cosine && total > 0.0) {
    const double progress = std::min(1.0, static_cast<double>(t_ - 1) / total);
    lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  }
  double scale = 1.0;
  if (cfg_.grad_clip > 0.0) {
    double sq = 0.0;
    for (auto& [name, p] : store)
      for (double x : p.grad.values()) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm > cfg_.grad_clip) scale = cfg_.grad_clip / norm;
  }
  for (auto& [name, p] : store) {
    const auto g = p.grad.values();
    if (scale != 1.0)
      for (double& x : g) x *= scale;
    const auto w = p.value.values();
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
      continue;
    }
    auto it = state_.find(name);
    if (it == state_.end()) {
      it = state_.emplace(name, Moments{ad::Tensor::zeros_like(p.value), ad::Tensor::zeros_like(p.value)}).first;
    }
    auto m = it->second.m.values();
    auto v = it->second.v.values();
    const bool zero = std::all_of(g.begin(), g.end(), [](double x) { return x == 0.0; });
    if (zero) {
      for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] *= b1;
        v[i] *= b2;
      }
      continue;
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.eps);
    }
  }
}

double train_step(net::ChangeNetWeights& w, const Crop& crop, std::span<const double> class_weights,
                  Optimizer& opt, const std::filesystem::path& dump_dir) {
  double loss = 0.0;
  {
    ad::Graph g;
    const auto r = net::forward(g, w, crop.t1, crop.t2);
    const ad::Var l = ad::softmax_cross_entropy(r.logits, crop.labels, class_weights);
    loss = l.value().item();
    if (!std::isfinite(loss)) {
      std::string where;
      if (!dump_dir.empty()) {
        std::filesystem::create_directories(dump_dir);
        pc::save_cloud(pc::LabeledPointCloud("crop_t1", pc::Epoch::T1, crop.t1), dump_dir / "nonfinite_t1.xyz");
        pc::save_cloud(pc::LabeledPointCloud("crop_t2", pc::Epoch::T2, crop.t2, crop.labels),
                       dump_dir / "nonfinite_t2.xyzl");
        where = "; crop written to " + dump_dir.string();
      }
      char c[96];
      std::snprintf(c, sizeof c, " at crop center (%.6f, %.6f, %.6f)", crop.center.x, crop.center.y,
                    crop.center.z);
      throw NumericError("training: non-finite loss after " + std::to_string(opt.steps()) +
                         " steps" + c + where);
    }
    g.backward(l);
  }
  opt.step(w.store);
  return loss;
}

ad::Tensor predict_scene(net::ChangeNetWeights& w, const IndexedPair& scene, std::size_t chunk) {
  const ScenePair& s = *scene.pair;
  ad::Tensor logits({s.t2.size(), net::kClasses});
  if (s.t2.empty()) return logits;
  // Tile centers by farthest point sampling; each point takes its prediction
  // from the crop of its nearest center so it sits well inside that crop.
  const std::size_t tiles = std::max<std::size_t>(1, (2 * s.t2.size() + chunk - 1) / chunk);
  const std::vector<Index> centers = pc::farthest_point_sample_from(
      s.t2, std::min(tiles, s.t2.size()), pc::coordinate_pinned_start(s.t2));
  std::vector<Vec3> center_coords;
  for (Index i : centers) center_coords.push_back(s.t2[i]);
  const pc::SpatialIndex center_index(center_coords);
  std::vector<Index> owner(s.t2.size());
  for (std::size_t i = 0; i < s.t2.size(); ++i) owner[i] = center_index.nearest(s.t2[i]);

  std::vector<std::uint8_t> covered(s.t2.size(), 0);
  auto run = [&](const Vec3& center, auto&& accept) {
    const Crop crop = make_crop(scene, center, chunk, w.config.min_points);
    ad::Graph g;
    const ad::Tensor& out = net::forward(g, w, crop.t1, crop.t2).logits.value();
    for (std::size_t i = 0; i < crop.t2_source.size(); ++i) {
      const Index dst = crop.t2_source[i];
      if (covered[dst] || !accept(dst)) continue;
      covered[dst] = 1;
      for (std::size_t c = 0; c < net::kClasses; ++c) logits.at(dst, c) = out.at(i, c);
    }
  };
  for (std::size_t t = 0; t < centers.size(); ++t) {
    run(center_coords[t], [&](Index dst) { return owner[dst] == static_cast<Index>(t); });
  }
  // Cells larger than a crop leave stragglers; cover them greedily.
  for (std::size_t next = 0; next < covered.size(); ++next) {
    if (!covered[next]) run(s.t2[next], [](Index) { return true; });
  }
  return logits;
}

std::vector<pc::Label> argmax_labels(const ad::Tensor& logits) {
  std::vector<pc::Label> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = logits.at(i, 1) > logits.at(i, 0) ? 1 : 0;
  return out;
}

Evaluation evaluate_scenes(net::ChangeNetWeights& w, std::span<const IndexedPair> scenes,
                           std::size_t chunk, std::span<const double> class_weights) {
  eval::ConfusionMatrix total;
  double loss_sum = 0.0, weight_sum = 0.0;
  for (const auto& scene : scenes) {
    const ad::Tensor logits = predict_scene(w, scene, chunk);
    const auto& labels = scene.pair->labels;
    total += eval::confusion(argmax_labels(logits), labels);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double a = logits.at(i, 0), b = logits.at(i, 1);
      const double mx = std::max(a, b);
      const double lse = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
      const double wt = class_weights[labels[i]];
      loss_sum += wt * (lse - logits.at(i, labels[i]));
      weight_sum += wt;
    }
  }
  return {loss_sum / weight_sum, eval::metrics(total)};
}

void save_model(const net::ChangeNetWeights& w, std::size_t chunk, std::uint64_t seed,
                const std::filesystem::path& path) {
  ad::save_checkpoint(w.store, path);
  std::string manifest;
  for (const auto& [k, v] : config::net_entries(w.config)) manifest += k + " = " + v + "\n";
  manifest += "train.chunk = " + std::to_string(chunk) + "\n";
  manifest += "train.seed = " + std::to_string(seed) + "\n";
  pc::write_text_file(path.string() + ".manifest", manifest);
}

LoadedModel load_model(const std::filesystem::path& path) {
  const std::filesystem::path sidecar = path.string() + ".manifest";
  if (!std::filesystem::exists(sidecar)) {
    throw DataError(sidecar.string() + ": checkpoint manifest not found");
  }
  const config::RunConfig cfg =
      config::resolve(config::parse_entries(pc::read_text_file(sidecar), sidecar.string()),
                      sidecar.string());
  LoadedModel m{net::ChangeNetWeights::create(cfg.net), cfg.train.chunk};
  ad::assign_parameters(m.weights.store, ad::load_checkpoint(path));
  return m;
}

FitResult fit(const net::NetConfig& net_cfg, const TrainConfig& cfg,
              std::span<const ScenePair> scenes, const std::filesystem::path& out_dir,
              const LogFn& log) {
  std::vector<ScenePair> train_set;
  std::vector<const ScenePair*> test_ptrs;
  for (const auto& s : scenes) {
    if (s.split == "train") train_set.push_back(s);
    else test_ptrs.push_back(&s);
  }
  if (train_set.empty()) throw DataError("training: the train split is empty");
  if (cfg.chunk < 64) throw ConfigError("train.chunk must be >= 64");

  std::vector<IndexedPair> train_idx, eval_idx;
  for (const auto& s : train_set) train_idx.emplace_back(s);
  if (test_ptrs.empty()) {
    for (const auto& s : train_set) eval_idx.emplace_back(s);
  } else {
    for (const ScenePair* s : test_ptrs) eval_idx.emplace_back(*s);
  }
  const std::array<double, 2> weights =
      cfg.class_weights ? *cfg.class_weights : inverse_frequency_weights(train_set);

  net::ChangeNetWeights w = net::ChangeNetWeights::create(net_cfg);
  Optimizer opt(cfg);
  std::filesystem::create_directories(out_dir);
  std::string csv = "epoch,loss,OA,mrecall,mprecision,mf1,mIoU\n";
  FitResult result;

  auto record = [&](std::size_t epoch, double train_loss) {
    EpochRecord rec{epoch, train_loss, evaluate_scenes(w, eval_idx, cfg.chunk, weights)};
    const auto& r = rec.eval.report;
    csv += std::to_string(epoch) + "," + fmt("%.6f", rec.eval.loss) + "," + fmt("%.4f", r.oa) + "," +
           fmt("%.4f", r.mrecall) + "," + fmt("%.4f", r.mprecision) + "," + fmt("%.4f", r.mf1) +
           "," + fmt("%.4f", r.miou) + "\n";
    pc::write_text_file(out_dir / "metrics.csv", csv);
    if (r.miou > result.best_miou) {
      result.best_miou = r.miou;
      result.best_epoch = epoch;
      save_model(w, cfg.chunk, cfg.seed, out_dir / "best.ckpt");
    }
    if (cfg.checkpoint_every && epoch % cfg.checkpoint_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04zu.ckpt", epoch);
      save_model(w, cfg.chunk, cfg.seed, out_dir / name);
    }
    if (log) {
      log("epoch " + std::to_string(epoch) + " train_loss " + fmt("%.5f", train_loss) + " eval_loss " +
          fmt("%.5f", rec.eval.loss) + " OA " + fmt("%.2f", r.oa) + " mIoU " + fmt("%.2f", r.miou));
    }
    result.history.push_back(rec);
  };

  record(0, 0.0);
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double sum = 0.0;
    for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s) {
      const std::size_t step = (epoch - 1) * cfg.steps_per_epoch + s;
      Rng rng(mix_seed(cfg.seed, step));
      const IndexedPair& scene = train_idx[uniform_index(rng, train_idx.size())];
      const Vec3 center = sample_crop_center(scene, rng, cfg.change_focus);
      Crop crop = make_crop(scene, center, cfg.chunk, net_cfg.min_points);
      if (cfg.augment) rotate_crop(crop, uniform(rng, 0.0, 2.0 * std::numbers::pi));
      sum += train_step(w, crop, weights, opt, out_dir);
    }
    record(epoch, sum / static_cast<double>(cfg.steps_per_epoch));
  }
  save_model(w, cfg.chunk, cfg.seed, out_dir / "last.ckpt");
  return result;
}

}  // namespace cd::train
