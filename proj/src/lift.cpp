#include "pseudobox/lift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "pseudobox/error.hpp"

namespace pbox {

CanonicalCloud::CanonicalCloud(std::vector<Point3> vertices, double index_cell)
    : vertices_(std::move(vertices)), grid_(index_cell) {
  for (std::uint32_t i = 0; i < vertices_.size(); ++i) {
    if (!vertices_[i].allFinite()) throw DomainError("canonical vertex is not finite");
    buckets_[voxel_key_of(grid_, vertices_[i])].push_back(i);
  }
}

int CanonicalCloud::reach_for(double radius) const {
  return std::max(1, static_cast<int>(std::ceil(radius / grid_.cell)));
}

std::optional<std::uint32_t> CanonicalCloud::nearest(const Point3& p, double radius) const {
  std::optional<std::uint32_t> best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for_each_within(p, radius, [&](std::uint32_t idx) {
    const double d2 = (vertices_[idx] - p).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && idx < *best)) {
      best_d2 = d2;
      best = idx;
    }
  });
  return best;
}

std::vector<std::uint32_t> standardize_coordinates(std::span<const Point3> points,
                                                   const CanonicalCloud& canon,
                                                   double snap_radius) {
  if (canon.empty()) throw ConfigError("canonical cloud is empty");
  if (!(snap_radius > 0.0)) throw ConfigError("snap radius must be positive");
  std::vector<std::uint32_t> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (auto idx = canon.nearest(p, snap_radius)) out.push_back(*idx);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Point3> voxel_centroids(std::span<const Point3> points, const VoxelGridSpec& grid) {
  std::vector<std::pair<VoxelKey, std::uint32_t>> keyed(points.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(points.size()); ++i) {
    keyed[i] = {voxel_key_of(grid, points[i]), static_cast<std::uint32_t>(i)};
  }
  // sorting by (key, index) fixes the summation order
  std::sort(keyed.begin(), keyed.end());
  std::vector<Point3> out;
  for (size_t i = 0; i < keyed.size();) {
    size_t j = i;
    Point3 sum = Point3::Zero();
    while (j < keyed.size() && keyed[j].first == keyed[i].first) {
      sum += points[keyed[j].second];
      ++j;
    }
    out.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

CanonicalCloud build_canonical_cloud(const Scene& scene, std::span<const RawSegment> lifted,
                                     CanonicalMode mode, double cell, double index_cell) {
  if (mode == CanonicalMode::MeshVertices) {
    if (!scene.mesh) throw ConfigError("mesh-vertex canonical cloud requested but scene has no mesh");
    return CanonicalCloud(scene.mesh->vertices, index_cell);
  }
  std::vector<Point3> all;
  size_t total = 0;
  for (const auto& seg : lifted) total += seg.points.size();
  all.reserve(total);
  for (const auto& seg : lifted) all.insert(all.end(), seg.points.begin(), seg.points.end());
  return CanonicalCloud(voxel_centroids(all, VoxelGridSpec(cell)), index_cell);
}

std::vector<Point3> lift_segment_points(const LoadedFrame& frame, const SegmentMask2D& mask,
                                        std::uint32_t segment_id) {
  const auto& intr = frame.record.intrinsics;
  std::vector<Point3> out;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (mask.at(u, v) != segment_id || !frame.depth.valid(u, v)) continue;
      out.push_back(backproject_pixel(intr, frame.record.pose, frame.depth.at(u, v), u, v));
    }
  }
  return out;
}

std::vector<RawSegment> lift_frame_segments(const LoadedFrame& frame, const SegmentMask2D& mask) {
  if (mask.width != frame.depth.width || mask.height != frame.depth.height) {
    throw DomainError("mask and depth dimensions differ");
  }
  std::map<std::uint32_t, RawSegment> by_id;
  const auto& intr = frame.record.intrinsics;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      const auto id = mask.at(u, v);
      if (id == 0 || !frame.depth.valid(u, v)) continue;
      auto& seg = by_id[id];
      seg.points.push_back(backproject_pixel(intr, frame.record.pose, frame.depth.at(u, v), u, v));
    }
  }
  std::vector<RawSegment> out;
  out.reserve(by_id.size());
  for (auto& [id, seg] : by_id) {
    seg.frame_index = frame.record.index;
    seg.segment_id = id;
    out.push_back(std::move(seg));
  }
  return out;
}

std::optional<PartialSegment3D> lift_segment(const LoadedFrame& frame, const SegmentMask2D& mask,
                                             std::uint32_t segment_id,
                                             const CanonicalCloud& canon, double snap_radius) {
  const auto pts = lift_segment_points(frame, mask, segment_id);
  auto idx = standardize_coordinates(pts, canon, snap_radius);
  if (idx.empty()) return std::nullopt;
  PartialSegment3D node;
  node.frame_index = frame.record.index;
  node.segment_id = segment_id;
  node.points = std::move(idx);
  return node;
}

std::vector<PartialSegment3D> standardize_segments(std::span<const RawSegment> raw,
                                                   const CanonicalCloud& canon,
                                                   double snap_radius) {
  if (canon.empty()) throw ConfigError("canonical cloud is empty");
  std::vector<std::vector<std::uint32_t>> snapped(raw.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(raw.size()); ++i) {
    snapped[i] = standardize_coordinates(raw[i].points, canon, snap_radius);
  }
  std::vector<PartialSegment3D> nodes;
  for (size_t i = 0; i < raw.size(); ++i) {
    if (snapped[i].empty()) continue;
    PartialSegment3D n;
    n.node_id = static_cast<std::uint32_t>(nodes.size());
    n.frame_index = raw[i].frame_index;
    n.segment_id = raw[i].segment_id;
    n.points = std::move(snapped[i]);
    nodes.push_back(std::move(n));
  }
  return nodes;
}

}  // namespace pbox
