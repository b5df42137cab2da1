#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Core>

namespace pbox {

using Point3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws DomainError unless fx, fy > 0 and the principal point lies on the raster.
  void validate() const;
};

// World-to-camera rigid transform: p_cam = rotation * p_world + translation.
struct CameraPose {
  Mat3 rotation = Mat3::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  void validate() const;
  Point3 center() const { return -rotation.transpose() * translation; }

  // Camera at `eye` looking at `target`, camera y axis pointing away from `up`.
  static CameraPose look_at(const Point3& eye, const Point3& target,
                            const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());
};

// Metric depth raster; 0 marks a missing measurement.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), values(static_cast<size_t>(w) * h, 0.0) {}

  double at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
  double& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
  bool valid(int u, int v) const { return at(u, v) > 0.0; }
};

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

// Lifts pixel (u, v) with metric depth into world coordinates:
//   p = R^T K^-1 depth [u v 1]^T - R^T t
Point3 backproject_pixel(const CameraIntrinsics& intr, const CameraPose& pose, double depth,
                         int u, int v);

// Inverse of backproject_pixel; throws GeometryError for points with camera-frame z <= 0.
PixelDepth project_point(const CameraIntrinsics& intr, const CameraPose& pose, const Point3& p);

struct VoxelKey {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
  friend auto operator<=>(const VoxelKey&, const VoxelKey&) = default;

  VoxelKey offset(int dx, int dy, int dz) const { return {x + dx, y + dy, z + dz}; }
};

struct VoxelKeyHash {
  size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL;
    h ^= static_cast<std::uint64_t>(k.y) * 19349663ULL + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 83492791ULL + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<size_t>(h);
  }
};

// Half-open cubic cells [origin + k*cell, origin + (k+1)*cell) per axis.
struct VoxelGridSpec {
  double cell = 1.0;
  Point3 origin = Point3::Zero();

  VoxelGridSpec() = default;
  VoxelGridSpec(double cell_size, Point3 grid_origin = Point3::Zero());
};

VoxelKey voxel_key_of(const VoxelGridSpec& spec, const Point3& p);

}  // namespace pbox
