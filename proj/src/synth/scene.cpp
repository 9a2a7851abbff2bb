#include "synth/scene.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "common/errors.hpp"

namespace cd::synth {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

Vec3 jitter(const Vec3& p, double sigma, Rng& rng) {
  if (sigma <= 0.0) return p;
  const double dx = normal(rng, 0.0, sigma);
  const double dy = normal(rng, 0.0, sigma);
  const double dz = normal(rng, 0.0, sigma);
  return {p.x + dx, p.y + dy, p.z + dz};
}

bool in_footprint(const Vec3& p, const Box& b, double pad = 0.0) {
  return p.x >= b.lo.x - pad && p.x <= b.hi.x + pad && p.y >= b.lo.y - pad && p.y <= b.hi.y + pad;
}

bool in_volume(const Vec3& p, const Box& b, double zpad) {
  return in_footprint(p, b) && p.z >= b.lo.z - zpad && p.z <= b.hi.z;
}

void validate(const SceneSpec& spec) {
  if (!(spec.density > 0.0)) throw ConfigError("scene.density must be > 0");
  if (!(spec.extent > 0.0)) throw ConfigError("scene.extent must be > 0");
  if (spec.kind == SurfaceKind::Tunnel && !(spec.radius > 0.0)) {
    throw ConfigError("scene.radius must be > 0 for a tunnel");
  }
  if (spec.noise < 0.0 || spec.margin < 0.0 || spec.band < 0.0) {
    throw ConfigError("scene.noise, scene.margin and scene.band must be >= 0");
  }
  for (const auto& op : spec.ops) {
    if (op.region.hi.x <= op.region.lo.x || op.region.hi.y <= op.region.lo.y) {
      throw ConfigError("scene.ops: region must have positive xy extent");
    }
    if (op.kind == OpKind::Subside && !(op.depth > spec.noise)) {
      throw ConfigError("scene.ops: subsidence depth must exceed the noise sigma");
    }
    if (op.kind != OpKind::Subside) {
      if (op.count == 0) throw ConfigError("scene.ops: box point count must be positive");
      if (op.region.hi.z <= op.region.lo.z) throw ConfigError("scene.ops: box must have positive height");
    }
  }
}

}  // namespace

std::vector<ChangeOp> parse_ops(const std::string& text) {
  std::vector<ChangeOp> ops;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream in(item);
    std::string kind;
    in >> kind;
    std::vector<double> v;
    std::string tok;
    while (in >> tok) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0' || !std::isfinite(x)) {
        throw ConfigError("scene.ops: bad number '" + tok + "' in '" + item + "'");
      }
      v.push_back(x);
    }
    ChangeOp op;
    if (kind == "subside") {
      if (v.size() != 5) throw ConfigError("scene.ops: subside takes x0 y0 x1 y1 depth");
      op.kind = OpKind::Subside;
      op.region = {{v[0], v[1], 0.0}, {v[2], v[3], 0.0}};
      op.depth = v[4];
    } else if (kind == "add-box" || kind == "remove") {
      if (v.size() != 7) throw ConfigError("scene.ops: " + kind + " takes x0 y0 z0 x1 y1 z1 count");
      if (v[6] < 1 || v[6] != std::floor(v[6])) throw ConfigError("scene.ops: count must be a positive integer");
      op.kind = kind == "remove" ? OpKind::Remove : OpKind::Add;
      op.region = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
      op.count = static_cast<std::size_t>(v[6]);
    } else {
      throw ConfigError("scene.ops: unknown op '" + kind + "' (expected subside, add-box, remove)");
    }
    ops.push_back(op);
  }
  return ops;
}

std::string format_ops(const std::vector<ChangeOp>& ops) {
  std::string out;
  for (const auto& op : ops) {
    if (!out.empty()) out += "; ";
    const Box& r = op.region;
    if (op.kind == OpKind::Subside) {
      out += "subside " + num(r.lo.x) + " " + num(r.lo.y) + " " + num(r.hi.x) + " " + num(r.hi.y) +
             " " + num(op.depth);
    } else {
      out += (op.kind == OpKind::Add ? "add-box " : "remove ") + num(r.lo.x) + " " + num(r.lo.y) +
             " " + num(r.lo.z) + " " + num(r.hi.x) + " " + num(r.hi.y) + " " + num(r.hi.z) + " " +
             std::to_string(op.count);
    }
  }
  return out;
}

SurfaceSample sample_surface(const SceneSpec& spec, Rng& rng) {
  SurfaceSample s;
  auto emit = [&](const Vec3& p, bool floor) {
    s.points.push_back(jitter(p, spec.noise, rng));
    s.floor.push_back(floor ? 1 : 0);
  };
  // Each surface is a rectangle in some parameter domain; cells of 1 m^2 (or
  // the remainder at the domain edge).
  auto sample_domain = [&](double width, double height, auto&& map, bool floor) {
    for (double u0 = 0.0; u0 < width; u0 += 1.0) {
      const double du = std::min(1.0, width - u0);
      for (double v0 = 0.0; v0 < height; v0 += 1.0) {
        const double dv = std::min(1.0, height - v0);
        const std::uint64_t n = poisson(rng, spec.density * du * dv);
        for (std::uint64_t i = 0; i < n; ++i) {
          const double u = u0 + du * uniform01(rng);
          const double v = v0 + dv * uniform01(rng);
          emit(map(u, v), floor);
        }
      }
    }
  };
  if (spec.kind == SurfaceKind::Ground) {
    sample_domain(spec.extent, spec.extent, [](double u, double v) { return Vec3{u, v, 0.0}; }, true);
  } else {
    const double r = spec.radius;
    // Floor spans y in [-r, r]; the vault is the upper half cylinder around x.
    sample_domain(spec.extent, 2.0 * r, [r](double u, double v) { return Vec3{u, v - r, 0.0}; }, true);
    sample_domain(spec.extent, std::numbers::pi * r, [r](double u, double v) {
      const double theta = v / r;
      return Vec3{u, r * std::cos(theta), r * std::sin(theta)};
    }, false);
  }
  return s;
}

std::vector<double> apply_subsidence(PointSet& points, const Box& region, double depth,
                                     double margin, const std::vector<std::uint8_t>* mask) {
  std::vector<double> shift(points.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    Vec3& p = points[i];
    if (!in_footprint(p, region)) continue;
    const double d = std::min({p.x - region.lo.x, region.hi.x - p.x, p.y - region.lo.y,
                               region.hi.y - p.y});
    const double f = margin > 0.0 ? std::min(1.0, d / margin) : 1.0;
    shift[i] = depth * f;
    p.z -= shift[i];
  }
  return shift;
}

PointSet sample_box_surface(const Box& box, std::size_t count, double noise, Rng& rng) {
  const double wx = box.hi.x - box.lo.x, wy = box.hi.y - box.lo.y, h = box.hi.z - box.lo.z;
  const double areas[5] = {wx * wy, wx * h, wx * h, wy * h, wy * h};
  const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4];
  PointSet out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double pick = uniform01(rng) * total;
    int face = 0;
    while (face < 4 && pick >= areas[face]) pick -= areas[face++];
    const double a = uniform01(rng), b = uniform01(rng);
    Vec3 p;
    switch (face) {
      case 0: p = {box.lo.x + a * wx, box.lo.y + b * wy, box.hi.z}; break;
      case 1: p = {box.lo.x + a * wx, box.lo.y, box.lo.z + b * h}; break;
      case 2: p = {box.lo.x + a * wx, box.hi.y, box.lo.z + b * h}; break;
      case 3: p = {box.lo.x, box.lo.y + a * wy, box.lo.z + b * h}; break;
      default: p = {box.hi.x, box.lo.y + a * wy, box.lo.z + b * h}; break;
    }
    out.push_back(jitter(p, noise, rng));
  }
  return out;
}

std::vector<ChangeOp> place_ops(const SceneSpec& spec, Rng& rng) {
  std::vector<ChangeOp> ops = spec.ops;
  if (spec.layout == Layout::Fixed) return ops;
  const double lo = spec.kind == SurfaceKind::Ground ? 0.0 : -spec.radius;
  const double hi = spec.kind == SurfaceKind::Ground ? spec.extent : spec.radius;
  for (auto& op : ops) {
    Box& r = op.region;
    // Translate within the surface, keeping a 0.5 m clearance where possible.
    auto shift_axis = [&](double& a, double& b, double dlo, double dhi) {
      const double span = b - a;
      const double min0 = dlo + 0.5, max0 = dhi - 0.5 - span;
      if (max0 <= min0) return;
      const double start = uniform(rng, min0, max0);
      b = start + span;
      a = start;
    };
    shift_axis(r.lo.x, r.hi.x, 0.0, spec.extent);
    shift_axis(r.lo.y, r.hi.y, lo, hi);
  }
  return ops;
}

Scene generate_scene(const SceneSpec& spec, const std::string& id) {
  validate(spec);
  Rng layout_rng(mix_seed(spec.seed, 3));
  const std::vector<ChangeOp> ops = place_ops(spec, layout_rng);

  Rng rng1(mix_seed(spec.seed, 1));
  Rng rng2(mix_seed(spec.seed, 2));
  SurfaceSample s1 = sample_surface(spec, rng1);
  SurfaceSample s2 = sample_surface(spec, rng2);
  std::vector<pc::Label> labels(s2.points.size(), pc::kUnchanged);
  std::vector<std::uint8_t> keep1(s1.points.size(), 1);
  std::vector<std::uint8_t> keep2(s2.points.size(), 1);
  PointSet extra1, extra2;
  const double zpad = 3.0 * spec.noise + 1e-9;

  for (const ChangeOp& op : ops) {
    switch (op.kind) {
      case OpKind::Subside: {
        const auto shift = apply_subsidence(s2.points, op.region, op.depth, spec.margin, &s2.floor);
        std::size_t moved = 0;
        for (std::size_t i = 0; i < shift.size(); ++i) {
          if (shift[i] > 0.0 && keep2[i]) {
            labels[i] = pc::kChanged;
            ++moved;
          }
        }
        if (moved == 0) throw DataError("synth: subsidence region contains no surface points");
        break;
      }
      case OpKind::Add: {
        std::size_t covered = 0;
        for (std::size_t i = 0; i < s2.points.size(); ++i) {
          if (in_footprint(s2.points[i], op.region)) ++covered;
          if (in_volume(s2.points[i], op.region, zpad)) keep2[i] = 0;
        }
        if (covered == 0) throw DataError("synth: added box does not intersect the surface");
        const PointSet box = sample_box_surface(op.region, op.count, spec.noise, rng2);
        extra2.insert(extra2.end(), box.begin(), box.end());
        break;
      }
      case OpKind::Remove: {
        std::size_t covered = 0;
        for (std::size_t i = 0; i < s1.points.size(); ++i) {
          if (in_footprint(s1.points[i], op.region)) ++covered;
          if (in_volume(s1.points[i], op.region, zpad)) keep1[i] = 0;
        }
        if (covered == 0) throw DataError("synth: removed box does not intersect the surface");
        const PointSet box = sample_box_surface(op.region, op.count, spec.noise, rng1);
        extra1.insert(extra1.end(), box.begin(), box.end());
        std::size_t marked = 0;
        for (std::size_t i = 0; i < s2.points.size(); ++i) {
          const Vec3& p = s2.points[i];
          if (in_footprint(p, op.region, spec.band) && p.z >= op.region.lo.z - spec.band - zpad &&
              p.z <= op.region.hi.z + spec.band) {
            labels[i] = pc::kChanged;
            ++marked;
          }
        }
        if (marked == 0) throw DataError("synth: removal footprint holds no later-epoch points");
        break;
      }
    }
  }

  PointSet p1, p2;
  std::vector<pc::Label> l2;
  for (std::size_t i = 0; i < s1.points.size(); ++i)
    if (keep1[i]) p1.push_back(s1.points[i]);
  p1.insert(p1.end(), extra1.begin(), extra1.end());
  for (std::size_t i = 0; i < s2.points.size(); ++i) {
    if (!keep2[i]) continue;
    p2.push_back(s2.points[i]);
    l2.push_back(labels[i]);
  }
  p2.insert(p2.end(), extra2.begin(), extra2.end());
  l2.insert(l2.end(), extra2.size(), pc::kChanged);
  if (p1.empty() || p2.empty()) throw DataError("synth: scene '" + id + "' has an empty epoch");
  return {pc::LabeledPointCloud(id + "_t1", pc::Epoch::T1, std::move(p1)),
          pc::LabeledPointCloud(id + "_t2", pc::Epoch::T2, std::move(p2), std::move(l2))};
}

std::vector<std::pair<std::string, std::string>> spec_entries(const SceneSpec& spec) {
  return {{"scene.kind", spec.kind == SurfaceKind::Ground ? "ground" : "tunnel"},
          {"scene.extent", num(spec.extent)},
          {"scene.radius", num(spec.radius)},
          {"scene.density", num(spec.density)},
          {"scene.noise", num(spec.noise)},
          {"scene.margin", num(spec.margin)},
          {"scene.band", num(spec.band)},
          {"scene.layout", spec.layout == Layout::Fixed ? "fixed" : "random"},
          {"scene.ops", format_ops(spec.ops)},
          {"scene.seed", std::to_string(spec.seed)}};
}

std::uint64_t scene_seed(std::uint64_t seed, std::size_t index) {
  return mix_seed(seed, 1000 + index);
}

std::vector<GeneratedScene> write_dataset(const DatasetSpec& spec, const std::filesystem::path& dir) {
  if (spec.count == 0) throw ConfigError("scene.count must be >= 1");
  if (spec.test_count >= spec.count) throw ConfigError("scene.test_count must be < scene.count");
  std::filesystem::create_directories(dir);
  std::vector<GeneratedScene> out;
  std::string manifest;
  for (const auto& [key, value] : spec_entries(spec.scene)) manifest += key + " = " + value + "\n";
  manifest += "scene.count = " + std::to_string(spec.count) + "\n";
  manifest += "scene.test_count = " + std::to_string(spec.test_count) + "\n";
  for (std::size_t i = 0; i < spec.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu", i);
    GeneratedScene g;
    g.id = name;
    g.split = i + spec.test_count >= spec.count ? "test" : "train";
    g.seed = scene_seed(spec.scene.seed, i);
    g.t1_file = g.id + "_t1.xyz";
    g.t2_file = g.id + "_t2.xyzl";
    SceneSpec s = spec.scene;
    s.seed = g.seed;
    const Scene scene = generate_scene(s, g.id);
    pc::save_cloud(scene.t1, dir / g.t1_file);
    pc::save_cloud(scene.t2, dir / g.t2_file);
    manifest += g.id + ".t1 = " + g.t1_file + "\n";
    manifest += g.id + ".t2 = " + g.t2_file + "\n";
    manifest += g.id + ".split = " + g.split + "\n";
    manifest += g.id + ".seed = " + std::to_string(g.seed) + "\n";
    Rng layout_rng(mix_seed(s.seed, 3));
    manifest += g.id + ".ops = " + format_ops(place_ops(s, layout_rng)) + "\n";
    out.push_back(g);
  }
  pc::write_text_file(dir / "manifest.txt", manifest);
  return out;
}

}  // namespace cd::synth
