#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ad/parameters.hpp"
#include "eval/metrics.hpp"
#include "network/change_net.hpp"
#include "pc/point_cloud.hpp"
#include "pc/spatial_index.hpp"
#include "training/train_config.hpp"

namespace cd::train {

struct ScenePair {
  std::string id;
  std::string split;  // "train" or "test"
  PointSet t1;
  PointSet t2;
  std::vector<pc::Label> labels;  // one per T2 point
};

// Reads manifest.txt written by the scene generator.
std::vector<ScenePair> load_scene_set(const std::filesystem::path& dir);

// Co-registered crop of one pair, translated so the crop center is the origin.
struct Crop {
  PointSet t1;
  PointSet t2;
  std::vector<pc::Label> labels;
  std::vector<Index> t2_source;  // indices into the scene's T2 cloud
  Vec3 center;
};

// Spatial indices of one pair, built once per scene.
struct IndexedPair {
  const ScenePair* pair = nullptr;
  pc::SpatialIndex t1;
  pc::SpatialIndex t2;
  std::vector<Index> changed;  // T2 indices labeled 1
  explicit IndexedPair(const ScenePair& p);
};

// Crop center for one training step: with probability `change_focus` a
// uniformly drawn changed T2 point, otherwise any T2 point.
Vec3 sample_crop_center(const IndexedPair& scene, Rng& rng, double change_focus);

// The `chunk` T2 points nearest to `center` and the T1 points inside the same
// sphere (at least `min_points` of them, at most 2 * chunk).
Crop make_crop(const IndexedPair& scene, const Vec3& center, std::size_t chunk,
               std::size_t min_points);

// Rotates both clouds of a centered crop about the vertical axis.
void rotate_crop(Crop& crop, double angle);

// w_c = total / (2 * count_c) over the given labels; 1 for an absent class.
std::array<double, 2> inverse_frequency_weights(std::span<const ScenePair> scenes);

class Optimizer {
 public:
  explicit Optimizer(const TrainConfig& cfg) : cfg_(cfg) {}
  // Adam: a tensor whose gradient is entirely zero keeps its value; its
  // moments still decay by beta1 / beta2.
  void step(ad::ParameterStore& store);
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    ad::Tensor m;
    ad::Tensor v;
  };
  TrainConfig cfg_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> state_;
};

// One forward/backward/update on a crop. Throws NumericError on a non-finite
// loss after writing the crop to `dump_dir` (when non-empty).
double train_step(net::ChangeNetWeights& w, const Crop& crop, std::span<const double> class_weights,
                  Optimizer& opt, const std::filesystem::path& dump_dir = {});

// Logits for every T2 point by tiling the scene with crops.
ad::Tensor predict_scene(net::ChangeNetWeights& w, const IndexedPair& scene, std::size_t chunk);
std::vector<pc::Label> argmax_labels(const ad::Tensor& logits);

struct Evaluation {
  double loss = 0.0;
  eval::MetricReport report;
};
Evaluation evaluate_scenes(net::ChangeNetWeights& w, std::span<const IndexedPair> scenes,
                           std::size_t chunk, std::span<const double> class_weights);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  Evaluation eval;
};

struct FitResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_miou = -1.0;
};

using LogFn = std::function<void(const std::string&)>;

// Trains from scratch and writes into `out_dir`: metrics.csv, best.ckpt,
// last.ckpt (each with a .manifest sidecar) and periodic epoch checkpoints.
FitResult fit(const net::NetConfig& net_cfg, const TrainConfig& cfg,
              std::span<const ScenePair> scenes, const std::filesystem::path& out_dir,
              const LogFn& log = {});

// Checkpoint with the architecture sidecar written by fit().
struct LoadedModel {
  net::ChangeNetWeights weights;
  std::size_t chunk = 1024;
};
void save_model(const net::ChangeNetWeights& w, std::size_t chunk, std::uint64_t seed,
                const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace cd::train
