#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>

#include "common/errors.hpp"
#include "common/random.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "pc/point_cloud.hpp"
#include "pc/sampling.hpp"
#include "pc/spatial_index.hpp"

using namespace cd;
using namespace cd::pc;

namespace {

PointSet random_points(Rng& rng, std::size_t n, double extent = 10.0) {
  PointSet pts(n);
  for (auto& p : pts) p = {uniform(rng, 0, extent), uniform(rng, 0, extent), uniform(rng, 0, extent)};
  return pts;
}

PointSet line_points(std::initializer_list<double> xs) {
  PointSet pts;
  for (double x : xs) pts.push_back({x, 0, 0});
  return pts;
}

}  // namespace

TEST_CASE("load_cloud parses xyz and xyzl text") {
  const auto xyz = parse_cloud("0 0 0\n1 0 0\n", CloudFormat::Xyz);
  CHECK(xyz.size() == 2);
  CHECK_FALSE(xyz.has_labels());
  CHECK(xyz.points()[1] == Vec3{1, 0, 0});

  const auto xyzl = parse_cloud("0 0 0 1\n", CloudFormat::Xyzl);
  REQUIRE(xyzl.size() == 1);
  CHECK(xyzl.labels()[0] == 1);
}

TEST_CASE("load_cloud skips comments and accepts CRLF") {
  const auto c = parse_cloud("# header\r\n1.5 2 3\r\n\r\n  # indented comment\n4 5 6\n",
                             CloudFormat::Xyz);
  REQUIRE(c.size() == 2);
  CHECK(c.points()[0] == Vec3{1.5, 2, 3});
}

TEST_CASE("load_cloud errors name the offending line") {
  try {
    parse_cloud("0 0 nan\n", CloudFormat::Xyz, "f.xyz");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  try {
    parse_cloud("0 0 0\n1 2\n", CloudFormat::Xyz, "f.xyz");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_cloud("0 0 0 x\n", CloudFormat::Xyzl), ParseError);
  CHECK_THROWS_AS(parse_cloud("0 0 0 2\n", CloudFormat::Xyzl), ValidationError);
  CHECK_THROWS_AS(parse_cloud("0 0 0\n", CloudFormat::Xyzl), ParseError);
  CHECK_THROWS_AS(parse_cloud("0 0 inf\n", CloudFormat::Xyz), ParseError);
}

TEST_CASE("cloud invariants are enforced on construction") {
  CHECK_THROWS_AS(LabeledPointCloud("c", Epoch::T1, {{0, 0, NAN}}), ValidationError);
  CHECK_THROWS_AS(LabeledPointCloud("c", Epoch::T1, {{0, 0, 0}}, std::vector<Label>{0, 1}),
                  ValidationError);
  CHECK_THROWS_AS(LabeledPointCloud("c", Epoch::T1, {{0, 0, 0}}, std::vector<Label>{3}),
                  ValidationError);
}

TEST_CASE("save then load reproduces the file byte for byte") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    PointSet pts = random_points(rng, 50, 100.0);
    std::vector<Label> labels(pts.size());
    for (auto& l : labels) l = static_cast<Label>(rng() & 1);
    // Well-formed files are those already at 6-decimal precision.
    LabeledPointCloud first("c", Epoch::T2, pts, labels);
    const std::string text = format_cloud(first);
    const auto reloaded = parse_cloud(text, CloudFormat::Xyzl);
    CHECK(format_cloud(reloaded) == text);
  }
  const auto dir = std::filesystem::temp_directory_path() / "cd_pc_roundtrip";
  std::filesystem::create_directories(dir);
  const std::string text = "1.000000 2.000000 3.000000\n-0.500000 0.250000 10.125000\n";
  write_text_file(dir / "a.xyz", text);
  save_cloud(load_cloud(dir / "a.xyz"), dir / "b.xyz");
  CHECK(read_text_file(dir / "b.xyz") == text);
}

TEST_CASE("build_index rejects empty clouds and handles a single point") {
  CHECK_THROWS_AS(build_index(PointSet{}), DataError);
  const auto index = build_index(PointSet{{1, 2, 3}});
  const auto r = index.knn({-5, 0, 9}, 3);
  CHECK(r.indices == std::vector<Index>{0, 0, 0});
}

TEST_CASE("knn_query on collinear points") {
  const auto index = build_index(line_points({0, 1, 3, 7}));
  const auto r = index.knn({2, 0, 0}, 2);
  CHECK(r.indices == std::vector<Index>{1, 2});
  CHECK(r.sq_distances == std::vector<double>{1.0, 1.0});

  const auto self = index.knn({3, 0, 0}, 1);
  CHECK(self.indices == std::vector<Index>{2});
  CHECK(self.sq_distances[0] == 0.0);
}

TEST_CASE("knn_query pads with the last neighbor when N < k") {
  const auto index = build_index(line_points({0, 5}));
  const auto r = index.knn({1, 0, 0}, 5);
  CHECK(r.indices == std::vector<Index>{0, 1, 1, 1, 1});
  CHECK(r.sq_distances.back() == 16.0);
}

TEST_CASE("duplicate points come back in index order before farther points") {
  PointSet pts = {{5, 0, 0}, {1, 1, 1}, {0, 0, 0}, {1, 1, 1}, {1, 1, 1}, {2, 2, 2}};
  const auto index = build_index(pts);
  const auto r = index.knn({1, 1, 1}, 4);
  CHECK(r.indices == std::vector<Index>{1, 3, 4, 2});
}

TEST_CASE("kd-tree knn equals brute force on 1000 points") {
  Rng rng(3);
  const PointSet pts = random_points(rng, 1000);
  const auto index = build_index(pts);
  for (int q = 0; q < 50; ++q) {
    const Vec3 query{uniform(rng, -1, 11), uniform(rng, -1, 11), uniform(rng, -1, 11)};
    CHECK(index.knn(query, 8).indices == oracle::knn(pts, query, 8));
  }
}

TEST_CASE("property: knn equals brute force on 200 random clouds") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + uniform_index(rng, 512);
    const std::size_t k = 1 + uniform_index(rng, 32);
    PointSet pts = random_points(rng, n, 4.0);
    // Quantize some clouds so that ties are frequent.
    if (trial % 3 == 0) {
      for (auto& p : pts) p = {std::round(p.x), std::round(p.y), std::round(p.z)};
    }
    const auto index = build_index(pts);
    for (int q = 0; q < 4; ++q) {
      const Vec3 query = trial % 2 ? pts[uniform_index(rng, n)]
                                   : Vec3{uniform(rng, 0, 4), uniform(rng, 0, 4), uniform(rng, 0, 4)};
      const auto got = index.knn(query, k).indices;
      const auto want = oracle::knn(pts, query, k);
      REQUIRE(got == want);
    }
  }
}

TEST_CASE("radius query returns every point inside the ball") {
  Rng rng(5);
  const PointSet pts = random_points(rng, 300);
  const auto index = build_index(pts);
  const Vec3 q{5, 5, 5};
  std::vector<Index> want;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (squared_distance(pts[i], q) <= 4.0) want.push_back(static_cast<Index>(i));
  }
  CHECK(index.radius(q, 4.0) == want);
}

TEST_CASE("farthest_point_sample basics") {
  const PointSet pts = line_points({0, 1, 2, 10});
  CHECK(farthest_point_sample_from(pts, 2, 0) == std::vector<Index>{0, 3});
  CHECK(farthest_point_sample_from(pts, 1, 2) == std::vector<Index>{2});

  auto all = farthest_point_sample(pts, 4, 17);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<Index>{0, 1, 2, 3});

  CHECK(farthest_point_sample(pts, 1, 17) == std::vector<Index>{seeded_start_index(4, 17)});
  CHECK_THROWS_AS(farthest_point_sample(pts, 5, 1), DataError);
  CHECK_THROWS_AS(farthest_point_sample(pts, 0, 1), DataError);
}

TEST_CASE("farthest_point_sample with m = N covers duplicate points") {
  const PointSet pts = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {1, 0, 0}};
  auto all = farthest_point_sample_from(pts, 4, 1);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<Index>{0, 1, 2, 3});
}

TEST_CASE("farthest_point_sample matches a brute-force maximin oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const PointSet pts = random_points(rng, 40);
    const Index start = static_cast<Index>(uniform_index(rng, pts.size()));
    const auto got = farthest_point_sample_from(pts, 10, start);
    std::vector<Index> want{start};
    while (want.size() < 10) {
      Index best = 0;
      double best_d = -1;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (std::find(want.begin(), want.end(), i) != want.end()) continue;
        double d = INFINITY;
        for (Index c : want) d = std::min(d, squared_distance(pts[i], pts[c]));
        if (d > best_d) {
          best_d = d;
          best = static_cast<Index>(i);
        }
      }
      want.push_back(best);
    }
    CHECK(got == want);
  }
}

TEST_CASE("property: FPS is deterministic and beats random subsets on spread") {
  Rng rng(8);
  auto min_pairwise = [](const PointSet& pts, const std::vector<Index>& idx) {
    double m = INFINITY;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b)
        m = std::min(m, distance(pts[idx[a]], pts[idx[b]]));
    return m;
  };
  const PointSet pts = random_points(rng, 400);
  const std::size_t m = 16;
  const auto fps = farthest_point_sample(pts, m, 123);
  CHECK(fps == farthest_point_sample(pts, m, 123));
  const double fps_spread = min_pairwise(pts, fps);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Index> all(pts.size());
    std::iota(all.begin(), all.end(), Index{0});
    for (std::size_t i = all.size() - 1; i > 0; --i) std::swap(all[i], all[uniform_index(rng, i + 1)]);
    all.resize(m);
    CHECK(fps_spread >= min_pairwise(pts, all));
  }
}
