#include <random>

#include "doctest.h"
#include "support.hpp"

#include "pseudobox/error.hpp"
#include "pseudobox/geom.hpp"

using namespace pbox;

namespace {

CameraIntrinsics identity_k() {
  CameraIntrinsics k;
  k.fx = k.fy = 1.0;
  k.cx = k.cy = 0.0;
  k.width = k.height = 10;
  return k;
}

}  // namespace

TEST_CASE("backproject identity camera") {
  const auto p = backproject_pixel(identity_k(), CameraPose{}, 1.0, 2, 3);
  CHECK(p.x() == doctest::Approx(2.0));
  CHECK(p.y() == doctest::Approx(3.0));
  CHECK(p.z() == doctest::Approx(1.0));
}

TEST_CASE("backproject with pure translation") {
  CameraPose pose;
  pose.translation = Eigen::Vector3d(1, 0, 0);
  const auto p = backproject_pixel(identity_k(), pose, 1.0, 2, 3);
  CHECK(p.x() == doctest::Approx(1.0));
  CHECK(p.y() == doctest::Approx(3.0));
  CHECK(p.z() == doctest::Approx(1.0));
}

TEST_CASE("backproject errors") {
  const auto k = identity_k();
  try {
    backproject_pixel(k, CameraPose{}, 0.0, 1, 1);
    FAIL("expected an error");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == GeometryErrorKind::InvalidDepth);
  }
  try {
    backproject_pixel(k, CameraPose{}, 1.0, 10, 1);
    FAIL("expected an error");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == GeometryErrorKind::OutOfBounds);
  }
  CHECK_THROWS_AS(backproject_pixel(k, CameraPose{}, -2.0, 1, 1), GeometryError);
  CHECK_THROWS_AS(backproject_pixel(k, CameraPose{}, 1.0, 0, -1), GeometryError);
}

TEST_CASE("project identity and optical axis") {
  const auto k = identity_k();
  const auto px = project_point(k, CameraPose{}, Point3(2, 3, 1));
  CHECK(px.u == doctest::Approx(2.0));
  CHECK(px.v == doctest::Approx(3.0));
  CHECK(px.depth == doctest::Approx(1.0));

  CameraIntrinsics k2{500, 400, 320, 240, 640, 480};
  std::mt19937_64 rng(5);
  CameraPose pose;
  pose.rotation = testing::random_rotation(rng);
  pose.translation = Eigen::Vector3d(0.3, -1.0, 2.0);
  const Point3 axis = pose.rotation.row(2).transpose();
  const auto q = project_point(k2, pose, pose.center() + 2.0 * axis);
  CHECK(q.u == doctest::Approx(320.0));
  CHECK(q.v == doctest::Approx(240.0));
  CHECK(q.depth == doctest::Approx(2.0));
}

TEST_CASE("project behind camera") {
  try {
    project_point(identity_k(), CameraPose{}, Point3(0, 0, -1));
    FAIL("expected an error");
  } catch (const GeometryError& e) {
    CHECK(e.kind() == GeometryErrorKind::BehindCamera);
  }
  CHECK_THROWS_AS(project_point(identity_k(), CameraPose{}, Point3(1, 1, 0)), GeometryError);
}

TEST_CASE("round trip over random cameras") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> f(100, 1000), d(0.1, 20), t(-5, 5);
  for (int i = 0; i < 500; ++i) {
    CameraIntrinsics k;
    k.width = 640;
    k.height = 480;
    k.fx = f(rng);
    k.fy = f(rng);
    k.cx = std::uniform_real_distribution<double>(0, 639.9)(rng);
    k.cy = std::uniform_real_distribution<double>(0, 479.9)(rng);
    CameraPose pose;
    pose.rotation = testing::random_rotation(rng);
    pose.translation = Eigen::Vector3d(t(rng), t(rng), t(rng));
    const int u = std::uniform_int_distribution<int>(0, 639)(rng);
    const int v = std::uniform_int_distribution<int>(0, 479)(rng);
    const double depth = d(rng);
    const auto back = project_point(k, pose, backproject_pixel(k, pose, depth, u, v));
    CHECK(std::abs(back.u - u) < 1e-6);
    CHECK(std::abs(back.v - v) < 1e-6);
    CHECK(std::abs(back.depth - depth) < 1e-6);
  }
}

TEST_CASE("distances are invariant to the shared pose") {
  std::mt19937_64 rng(3);
  CameraIntrinsics k{600, 600, 320, 240, 640, 480};
  for (int i = 0; i < 100; ++i) {
    CameraPose a;
    CameraPose b;
    b.rotation = testing::random_rotation(rng);
    b.translation = Eigen::Vector3d(1, 2, 3);
    const double d1 = 1.0 + i * 0.05, d2 = 2.5;
    const double da = (backproject_pixel(k, a, d1, 10, 20) - backproject_pixel(k, a, d2, 600, 400)).norm();
    const double db = (backproject_pixel(k, b, d1, 10, 20) - backproject_pixel(k, b, d2, 600, 400)).norm();
    CHECK(std::abs(da - db) < 1e-9);
  }
}

TEST_CASE("intrinsics and pose validation") {
  CameraIntrinsics k{0.0, 1.0, 0.0, 0.0, 4, 4};
  CHECK_THROWS_AS(k.validate(), DomainError);
  k.fx = 1.0;
  k.cx = 4.0;
  CHECK_THROWS_AS(k.validate(), DomainError);
  k.cx = 3.9;
  CHECK_NOTHROW(k.validate());
  CameraPose p;
  p.rotation(0, 0) = -1.0;  // reflection
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.rotation(0, 0) = 1.0001;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK_NOTHROW(CameraPose{}.validate());
}

TEST_CASE("look_at points the optical axis at the target") {
  const Point3 eye(1, 2, 3), target(4, 0, 1);
  const auto pose = CameraPose::look_at(eye, target);
  CHECK_NOTHROW(pose.validate());
  CHECK((pose.center() - eye).norm() < 1e-12);
  const Eigen::Vector3d cam = pose.rotation * target + pose.translation;
  CHECK(std::abs(cam.x()) < 1e-12);
  CHECK(std::abs(cam.y()) < 1e-12);
  CHECK(cam.z() == doctest::Approx((target - eye).norm()));
}

TEST_CASE("voxel keys") {
  const VoxelGridSpec g(1.0);
  CHECK(voxel_key_of(g, Point3(0.2, 0.9, 1.1)) == VoxelKey{0, 0, 1});
  CHECK(voxel_key_of(g, Point3(1.0, 0, 0)) == VoxelKey{1, 0, 0});
  CHECK(voxel_key_of(g, Point3(-0.001, 0, 0)) == VoxelKey{-1, 0, 0});
  CHECK_THROWS_AS(VoxelGridSpec(0.0), DomainError);
  CHECK_THROWS_AS(VoxelGridSpec(-1.0), DomainError);

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-10, 10);
  const VoxelGridSpec shifted(0.25, Point3(0.25, 0.25, 0.25));
  const VoxelGridSpec base(0.25);
  for (int i = 0; i < 200; ++i) {
    const Point3 p(u(rng), u(rng), u(rng));
    const auto a = voxel_key_of(base, p);
    const auto b = voxel_key_of(shifted, p);
    CHECK(b == a.offset(-1, -1, -1));
    // the key's cell contains the point
    const Point3 lo = Point3(a.x, a.y, a.z) * 0.25;
    CHECK(((p - lo).array() >= 0.0).all());
    CHECK(((p - lo).array() < 0.25).all());
  }
}
