#include <random>

#include "doctest.h"

#include "pseudobox/boxes.hpp"
#include "pseudobox/error.hpp"

using namespace pbox;

namespace {

CompleteSegment3D all_of(const CanonicalCloud& c) {
  CompleteSegment3D s;
  s.id = 5;
  for (std::uint32_t i = 0; i < c.size(); ++i) s.points.push_back(i);
  return s;
}

AxisAlignedBox3D box(double sx, double sy, double sz, std::int64_t n) {
  AxisAlignedBox3D b;
  b.size = Eigen::Vector3d(sx, sy, sz);
  b.n_points = n;
  return b;
}

}  // namespace

TEST_CASE("unit cube corners") {
  std::vector<Point3> corners;
  for (int i = 0; i < 8; ++i) corners.push_back(Point3(i & 1, (i >> 1) & 1, (i >> 2) & 1));
  const CanonicalCloud canon(corners);
  for (auto mode : {CenterMode::Midpoint, CenterMode::Mean}) {
    const auto b = box_from_segment(all_of(canon), canon, mode);
    CHECK((b.center - Point3(0.5, 0.5, 0.5)).norm() < 1e-15);
    CHECK((b.size - Eigen::Vector3d(1, 1, 1)).norm() < 1e-15);
    CHECK(b.n_points == 8);
    CHECK(b.segment_id == 5);
  }
}

TEST_CASE("midpoint and mean centers differ on a skewed set") {
  const CanonicalCloud canon({Point3(0, 0, 0), Point3(0, 0, 0), Point3(1, 1, 1)});
  const auto mid = box_from_segment(all_of(canon), canon, CenterMode::Midpoint);
  const auto mean = box_from_segment(all_of(canon), canon, CenterMode::Mean);
  CHECK((mid.center - Point3(0.5, 0.5, 0.5)).norm() < 1e-15);
  CHECK((mean.center - Point3(1.0 / 3, 1.0 / 3, 1.0 / 3)).norm() < 1e-15);
  CHECK(mid.size == mean.size);
  CHECK((mean.size - Eigen::Vector3d(1, 1, 1)).norm() < 1e-15);
  // the mean box no longer contains (1, 1, 1)
  CHECK((mean.max_corner().array() < 1.0).all());
}

TEST_CASE("single point gives a zero-size box") {
  const CanonicalCloud canon({Point3(1, 2, 3)});
  const auto b = box_from_segment(all_of(canon), canon);
  CHECK(b.size == Eigen::Vector3d::Zero());
  CHECK(b.center == Point3(1, 2, 3));
  CHECK_THROWS_AS(box_from_segment(CompleteSegment3D{}, canon), DomainError);
}

TEST_CASE("midpoint boxes contain every member") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<Point3> pts(500);
  for (auto& p : pts) p = Point3(g(rng), g(rng), g(rng));
  const CanonicalCloud canon(pts);
  const auto b = box_from_segment(all_of(canon), canon);
  for (const auto& p : pts) {
    CHECK((p.array() >= b.min_corner().array() - 1e-12).all());
    CHECK((p.array() <= b.max_corner().array() + 1e-12).all());
  }
}

TEST_CASE("filter thresholds") {
  const auto scannet = BoxFilterConfig::for_profile(DatasetProfile::ScanNetLike, 1);
  CHECK(scannet.min_points == 300);
  CHECK(scannet.max_volume == 8.5);
  CHECK(BoxFilterConfig::for_profile(DatasetProfile::ArkitLike, 1).min_points == 500);
  CHECK(BoxFilterConfig::for_profile(DatasetProfile::Custom, 42).min_points == 42);
  CHECK_THROWS_AS(BoxFilterConfig::for_profile(DatasetProfile::Custom, 0), ConfigError);

  const std::vector<AxisAlignedBox3D> boxes{box(1, 1, 1, 299), box(3, 2, 1.5, 1000),
                                            box(1, 1, 1, 300), box(2, 2, 2.125, 300),
                                            box(0.5, 0.5, 0.5, 10000)};
  const auto kept = filter_boxes(boxes, scannet);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].n_points == 300);
  CHECK(kept[1].volume() == doctest::Approx(8.5));
  CHECK(kept[2].n_points == 10000);
  CHECK(filter_boxes(kept, scannet).size() == kept.size());
}

TEST_CASE("jsonl round trip is exact") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<AxisAlignedBox3D> boxes(20);
  for (auto& b : boxes) {
    b.center = Point3(u(rng), u(rng), u(rng));
    b.size = Eigen::Vector3d(std::abs(u(rng)), std::abs(u(rng)), std::abs(u(rng)));
    b.segment_id = static_cast<std::int64_t>(rng() % 1000);
    b.n_points = static_cast<std::int64_t>(rng() % 100000) + 1;
  }
  const auto back = parse_boxes_jsonl(boxes_to_jsonl("scene0", boxes), "mem");
  REQUIRE(back.size() == boxes.size());
  for (size_t i = 0; i < boxes.size(); ++i) {
    CHECK(back[i].scene_id == "scene0");
    CHECK(back[i].box.center == boxes[i].center);
    CHECK(back[i].box.size == boxes[i].size);
    CHECK(back[i].box.n_points == boxes[i].n_points);
    CHECK(back[i].box.segment_id == boxes[i].segment_id);
  }
  CHECK(parse_boxes_jsonl("", "mem").empty());
  CHECK_THROWS_AS(parse_boxes_jsonl("{\"scene_id\": \"a\"}\n", "mem"), IoError);
  CHECK_THROWS_AS(parse_boxes_jsonl("not json\n", "mem"), IoError);
  CHECK_THROWS_AS(parse_boxes_jsonl("{\"scene_id\":\"a\",\"segment_id\":1,\"center\":[0,0,0],"
                                    "\"size\":[-1,1,1],\"n_points\":1}\n", "mem"),
                  IoError);
}
