#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "common/random.hpp"
#include "pc/point_cloud.hpp"

namespace cd::synth {

enum class SurfaceKind { Ground, Tunnel };

enum class OpKind { Add, Remove, Subside };

// Axis-aligned region. Subsidence uses only the xy extent.
struct Box {
  Vec3 lo;
  Vec3 hi;
};

struct ChangeOp {
  OpKind kind = OpKind::Add;
  Box region;
  double depth = 0.0;       // subside
  std::size_t count = 0;    // add / remove: points sampled on the box surface
};

enum class Layout { Fixed, Random };

struct SceneSpec {
  SurfaceKind kind = SurfaceKind::Ground;
  double extent = 20.0;   // ground: square side; tunnel: length along x
  double radius = 3.0;    // tunnel only
  double density = 50.0;  // points per square meter
  double noise = 0.02;    // isotropic Gaussian sigma, meters
  double margin = 0.1;    // subsidence taper width inside the region border
  double band = 0.2;      // removal label band around the footprint
  Layout layout = Layout::Fixed;
  std::vector<ChangeOp> ops;
  std::uint64_t seed = 7;
};

struct Scene {
  pc::LabeledPointCloud t1;
  pc::LabeledPointCloud t2;  // labeled
};

// Text form of the op list: ops separated by ';', e.g.
//   "subside 4 4 9 9 2; add-box 12 12 0 13.5 13.5 1.5 500; remove 2 2 0 3 3 1 300"
std::vector<ChangeOp> parse_ops(const std::string& text);
std::string format_ops(const std::vector<ChangeOp>& ops);

// Base surface points with a flag marking floor points (those that subside).
struct SurfaceSample {
  PointSet points;
  std::vector<std::uint8_t> floor;
};

// Poisson count per 1 m^2 cell of the surface parameter domain, uniform
// placement inside the cell, Gaussian noise.
SurfaceSample sample_surface(const SceneSpec& spec, Rng& rng);

// z -= depth * min(1, d / margin) for points inside the xy region, where d is
// the distance to the region border. Returns the per-point shift.
std::vector<double> apply_subsidence(PointSet& points, const Box& region, double depth,
                                     double margin, const std::vector<std::uint8_t>* mask = nullptr);

// Points on the top and the four sides of a box, area-weighted.
PointSet sample_box_surface(const Box& box, std::size_t count, double noise, Rng& rng);

// Ops with a random xy translation per scene when layout is random.
std::vector<ChangeOp> place_ops(const SceneSpec& spec, Rng& rng);

Scene generate_scene(const SceneSpec& spec, const std::string& id = "scene");

struct DatasetSpec {
  SceneSpec scene;
  std::size_t count = 1;
  std::size_t test_count = 0;  // the last scenes form the test split
};

struct GeneratedScene {
  std::string id;
  std::string split;
  std::uint64_t seed = 0;
  std::string t1_file;
  std::string t2_file;
};

// Writes scene_NNN_t1.xyz / scene_NNN_t2.xyzl and manifest.txt into `dir`.
std::vector<GeneratedScene> write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir);

// "scene.*" key/value pairs describing the spec, in a fixed order.
std::vector<std::pair<std::string, std::string>> spec_entries(const SceneSpec& spec);

std::uint64_t scene_seed(std::uint64_t seed, std::size_t index);

}  // namespace cd::synth
