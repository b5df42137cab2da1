#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pseudobox/geom.hpp"
#include "pseudobox/ingest.hpp"
#include "pseudobox/mesh.hpp"

namespace pbox {

// Shared vertex set that every lifted point is snapped onto, so that point-set intersections
// across views become exact index intersections.
class CanonicalCloud {
 public:
  CanonicalCloud() = default;
  // `index_cell` is the bucket size of the nearest-vertex hash.
  explicit CanonicalCloud(std::vector<Point3> vertices, double index_cell = 0.1);

  size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }
  const Point3& operator[](std::uint32_t i) const { return vertices_[i]; }
  const std::vector<Point3>& vertices() const { return vertices_; }

  // Nearest vertex within `radius` (inclusive); lowest index wins distance ties.
  std::optional<std::uint32_t> nearest(const Point3& p, double radius) const;

  // Calls fn(index) for every vertex within `radius` of p.
  template <typename Fn>
  void for_each_within(const Point3& p, double radius, Fn&& fn) const {
    const int reach = reach_for(radius);
    const VoxelKey center = voxel_key_of(grid_, p);
    const double r2 = radius * radius;
    for (int dx = -reach; dx <= reach; ++dx) {
      for (int dy = -reach; dy <= reach; ++dy) {
        for (int dz = -reach; dz <= reach; ++dz) {
          const auto it = buckets_.find(center.offset(dx, dy, dz));
          if (it == buckets_.end()) continue;
          for (auto idx : it->second) {
            if ((vertices_[idx] - p).squaredNorm() <= r2) fn(idx);
          }
        }
      }
    }
  }

 private:
  int reach_for(double radius) const;

  std::vector<Point3> vertices_;
  VoxelGridSpec grid_;
  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> buckets_;
};

struct PartialSegment3D {
  std::uint32_t node_id = 0;
  int frame_index = 0;
  std::uint32_t segment_id = 0;
  std::vector<std::uint32_t> points;  // sorted unique canonical vertex indices
};

// Metric points lifted from one 2D segment before standardization.
struct RawSegment {
  int frame_index = 0;
  std::uint32_t segment_id = 0;
  std::vector<Point3> points;
};

enum class CanonicalMode { MeshVertices, VoxelCentroids };

// Snaps each point to its nearest canonical vertex within `snap_radius`; farther points are
// dropped. Returns sorted unique indices.
std::vector<std::uint32_t> standardize_coordinates(std::span<const Point3> points,
                                                   const CanonicalCloud& canon,
                                                   double snap_radius);

// Per-cell centroids of `points`, ordered by cell key.
std::vector<Point3> voxel_centroids(std::span<const Point3> points, const VoxelGridSpec& grid);

// Mesh mode returns the mesh vertices verbatim; voxel mode emits the centroid of every
// occupied cell of the lifted segment points.
CanonicalCloud build_canonical_cloud(const Scene& scene, std::span<const RawSegment> lifted,
                                     CanonicalMode mode, double cell, double index_cell = 0.1);

// Back-projects every valid-depth pixel labelled `segment_id`.
std::vector<Point3> lift_segment_points(const LoadedFrame& frame, const SegmentMask2D& mask,
                                        std::uint32_t segment_id);

// One RawSegment per non-zero id of `mask` with at least one valid depth pixel, ascending id.
std::vector<RawSegment> lift_frame_segments(const LoadedFrame& frame, const SegmentMask2D& mask);

// Empty optional when no pixel survives (all invalid depth or no vertex within reach).
std::optional<PartialSegment3D> lift_segment(const LoadedFrame& frame, const SegmentMask2D& mask,
                                             std::uint32_t segment_id,
                                             const CanonicalCloud& canon, double snap_radius);

// Standardizes every raw segment in parallel; empty ones are skipped and node ids assigned
// densely in input order.
std::vector<PartialSegment3D> standardize_segments(std::span<const RawSegment> raw,
                                                   const CanonicalCloud& canon,
                                                   double snap_radius);

}  // namespace pbox
