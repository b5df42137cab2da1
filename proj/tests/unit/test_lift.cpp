#include <random>

#include "doctest.h"
#include "reference.hpp"
#include "support.hpp"

#include "pseudobox/error.hpp"
#include "pseudobox/graph.hpp"
#include "pseudobox/lift.hpp"
#include "pseudobox/synth.hpp"

using namespace pbox;

namespace {

LoadedFrame flat_frame(int w, int h, double depth) {
  LoadedFrame f;
  f.record.intrinsics = CameraIntrinsics{1.0, 1.0, 0.0, 0.0, w, h};
  f.depth = DepthMap(w, h);
  for (auto& d : f.depth.values) d = depth;
  f.mask = SegmentMask2D(w, h);
  return f;
}

}  // namespace

TEST_CASE("snapping onto the canonical cloud") {
  const CanonicalCloud canon({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)});
  const std::vector<Point3> exact{Point3(1, 0, 0), Point3(0, 0, 0)};
  CHECK(standardize_coordinates(exact, canon, 0.05) == std::vector<std::uint32_t>{0, 1});
  const std::vector<Point3> near{Point3(0.01, 1.0, 0.0)};
  CHECK(standardize_coordinates(near, canon, 0.05) == std::vector<std::uint32_t>{2});
  const std::vector<Point3> far{Point3(0.5, 0.5, 0.1)};
  CHECK(standardize_coordinates(far, canon, 0.05).empty());
  CHECK_THROWS_AS(standardize_coordinates(exact, CanonicalCloud{}, 0.05), ConfigError);
  CHECK_THROWS_AS(standardize_coordinates(exact, canon, 0.0), ConfigError);
}

TEST_CASE("nearest matches a linear scan") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Point3> verts(2000);
  for (auto& v : verts) v = Point3(u(rng), u(rng), u(rng));
  verts.push_back(verts[10]);  // duplicate: lower index must win
  const CanonicalCloud canon(verts, 0.07);
  for (int i = 0; i < 500; ++i) {
    const Point3 p(u(rng), u(rng), u(rng));
    const double r = 0.02 + 0.2 * std::abs(u(rng));
    CHECK(canon.nearest(p, r) == reference::nearest_brute(verts, p, r));
  }
  CHECK(canon.nearest(verts[10], 0.01) == std::optional<std::uint32_t>(10));
  std::vector<Point3> pts(300);
  for (auto& p : pts) p = Point3(u(rng), u(rng), u(rng));
  CHECK(standardize_coordinates(pts, canon, 0.05) == reference::standardize_brute(pts, verts, 0.05));
}

TEST_CASE("voxel centroids") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.001, 0.049);
  std::vector<Point3> pts(1000);
  Point3 mean = Point3::Zero();
  for (auto& p : pts) {
    p = Point3(u(rng), u(rng), u(rng));
    mean += p;
  }
  mean /= 1000.0;
  const auto one = voxel_centroids(pts, VoxelGridSpec(0.05));
  REQUIRE(one.size() == 1);
  CHECK((one[0] - mean).norm() < 1e-12);
  const std::vector<Point3> two{Point3(0.01, 0, 0), Point3(0.06, 0, 0)};
  CHECK(voxel_centroids(two, VoxelGridSpec(0.05)).size() == 2);
}

TEST_CASE("canonical cloud modes") {
  Scene scene;
  TriangleMesh mesh;
  for (int i = 0; i < 100; ++i) mesh.vertices.push_back(Point3(i, 0, 0));
  const std::vector<RawSegment> lifted{{0, 1, {Point3(0.01, 0, 0), Point3(0.02, 0, 0)}}};
  CHECK_THROWS_AS(build_canonical_cloud(scene, lifted, CanonicalMode::MeshVertices, 0.05), ConfigError);
  scene.mesh = mesh;
  const auto m = build_canonical_cloud(scene, lifted, CanonicalMode::MeshVertices, 0.05);
  CHECK(m.size() == 100);
  CHECK(m[42] == mesh.vertices[42]);
  const auto v = build_canonical_cloud(scene, lifted, CanonicalMode::VoxelCentroids, 0.05);
  REQUIRE(v.size() == 1);
  CHECK(v[0].x() == doctest::Approx(0.015));
}

TEST_CASE("lift a four pixel segment") {
  auto frame = flat_frame(4, 4, 1.0);
  for (int u = 0; u < 4; ++u) frame.mask.at(u, 1) = 7;
  std::vector<Point3> verts;
  for (int u = 0; u < 4; ++u) verts.push_back(Point3(u, 1, 1));
  const CanonicalCloud canon(verts);
  const auto node = lift_segment(frame, frame.mask, 7, canon, 0.05);
  REQUIRE(node.has_value());
  CHECK(node->points == std::vector<std::uint32_t>{0, 1, 2, 3});
  CHECK(node->segment_id == 7);

  frame.depth.at(0, 1) = 0.0;
  frame.depth.at(3, 1) = 0.0;
  const auto half = lift_segment(frame, frame.mask, 7, canon, 0.05);
  REQUIRE(half.has_value());
  CHECK(half->points == std::vector<std::uint32_t>{1, 2});

  frame.depth.at(1, 1) = 0.0;
  frame.depth.at(2, 1) = 0.0;
  CHECK_FALSE(lift_segment(frame, frame.mask, 7, canon, 0.05).has_value());
}

TEST_CASE("frame segments and dense node ids") {
  auto frame = flat_frame(4, 4, 1.0);
  frame.mask.at(0, 0) = 5;
  frame.mask.at(3, 3) = 2;
  frame.mask.at(1, 1) = 9;
  frame.depth.at(1, 1) = 0.0;
  const auto raw = lift_frame_segments(frame, frame.mask);
  // id 9 has no valid depth and yields nothing
  REQUIRE(raw.size() == 2);
  CHECK(raw[0].segment_id == 2);
  CHECK(raw[1].segment_id == 5);
  const CanonicalCloud canon({Point3(0, 0, 1), Point3(3, 3, 1)});
  const auto nodes = standardize_segments(raw, canon, 0.1);
  REQUIRE(nodes.size() == 2);
  CHECK(nodes[0].node_id == 0);
  CHECK(nodes[1].node_id == 1);
  CHECK(nodes[0].segment_id == 2);
  CHECK(nodes[0].points == std::vector<std::uint32_t>{1});
  for (const auto& n : nodes)
    for (auto p : n.points) CHECK(p < canon.size());
}

TEST_CASE("two views of one slab overlap") {
  auto scene = synth::generate_scene(1, 0, 6.0, 8);
  AxisAlignedBox3D slab;
  slab.center = Point3(3.0, 3.0, 0.05);
  slab.size = Eigen::Vector3d(2.0, 2.0, 0.1);
  slab.segment_id = 1;
  scene.objects = {slab};
  scene.cameras = {scene.cameras[0], scene.cameras[1]};
  const synth::RenderConfig cfg;
  const auto views = synth::render_depth_and_masks(scene, cfg);
  std::vector<RawSegment> raw;
  std::vector<LoadedFrame> frames(2);
  for (int c = 0; c < 2; ++c) {
    frames[c].record.intrinsics = scene.cameras[c].intrinsics;
    frames[c].record.pose = scene.cameras[c].pose;
    frames[c].depth = views[c].depth;
    frames[c].mask = views[c].mask;
    raw.push_back({c, 1, lift_segment_points(frames[c], frames[c].mask, 1)});
    CHECK(raw.back().points.size() > 1000);
  }
  const auto canon = build_canonical_cloud(Scene{}, raw, CanonicalMode::VoxelCentroids, 0.05);
  const auto nodes = standardize_segments(raw, canon, 0.1);
  REQUIRE(nodes.size() == 2);
  CHECK(overlap_ratio(nodes[0].points, nodes[1].points) > 0.9);
  // pixel iteration order does not matter
  const auto again = lift_segment(frames[0], frames[0].mask, 1, canon, 0.1);
  REQUIRE(again.has_value());
  CHECK(again->points == nodes[0].points);
}
