#include "pseudobox/geom.hpp"

#include <cmath>
#include <string>

#include <Eigen/Geometry>

#include "pseudobox/error.hpp"

namespace pbox {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw DomainError("focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw DomainError("raster size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw DomainError("principal point outside the raster");
  }
}

void CameraPose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw DomainError("pose contains non-finite values");
  }
  const double ortho_err = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err >= 1e-6 || rotation.determinant() <= 0.0) {
    throw DomainError("rotation is not a proper orthonormal matrix");
  }
}

CameraPose CameraPose::look_at(const Point3& eye, const Point3& target,
                               const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-12) {
    right = forward.unitOrthogonal();
  }
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  CameraPose pose;
  pose.rotation.row(0) = right.transpose();
  pose.rotation.row(1) = down.transpose();
  pose.rotation.row(2) = forward.transpose();
  pose.translation = -pose.rotation * eye;
  return pose;
}

Point3 backproject_pixel(const CameraIntrinsics& intr, const CameraPose& pose, double depth,
                         int u, int v) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw GeometryError(GeometryErrorKind::InvalidDepth,
                        "depth must be finite and positive, got " + std::to_string(depth));
  }
  if (u < 0 || v < 0 || u >= intr.width || v >= intr.height) {
    throw GeometryError(GeometryErrorKind::OutOfBounds,
                        "pixel (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") outside raster");
  }
  const Eigen::Vector3d cam((u - intr.cx) / intr.fx * depth, (v - intr.cy) / intr.fy * depth, depth);
  return pose.rotation.transpose() * cam - pose.rotation.transpose() * pose.translation;
}

PixelDepth project_point(const CameraIntrinsics& intr, const CameraPose& pose, const Point3& p) {
  const Eigen::Vector3d cam = pose.rotation * p + pose.translation;
  if (!(cam.z() > 0.0)) {
    throw GeometryError(GeometryErrorKind::BehindCamera, "point is not in front of the camera");
  }
  return {intr.fx * cam.x() / cam.z() + intr.cx, intr.fy * cam.y() / cam.z() + intr.cy, cam.z()};
}

VoxelGridSpec::VoxelGridSpec(double cell_size, Point3 grid_origin)
    : cell(cell_size), origin(std::move(grid_origin)) {
  if (!(cell > 0.0)) {
    throw DomainError("voxel cell size must be positive");
  }
}

VoxelKey voxel_key_of(const VoxelGridSpec& spec, const Point3& p) {
  const Eigen::Vector3d q = (p - spec.origin) / spec.cell;
  return {static_cast<std::int64_t>(std::floor(q.x())), static_cast<std::int64_t>(std::floor(q.y())),
          static_cast<std::int64_t>(std::floor(q.z()))};
}

}  // namespace pbox
