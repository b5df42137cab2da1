#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pseudobox/cluster.hpp"
#include "pseudobox/ingest.hpp"
#include "pseudobox/lift.hpp"

namespace pbox {

struct AxisAlignedBox3D {
  Point3 center = Point3::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Zero();  // (w, l, h) along x, y, z
  std::int64_t segment_id = 0;
  std::int64_t n_points = 1;

  double volume() const { return size.x() * size.y() * size.z(); }
  Point3 min_corner() const { return center - 0.5 * size; }
  Point3 max_corner() const { return center + 0.5 * size; }
  static AxisAlignedBox3D from_corners(const Point3& lo, const Point3& hi);
};

enum class CenterMode { Midpoint, Mean };

CenterMode parse_center_mode(const std::string& name);

struct BoxFilterConfig {
  std::int64_t min_points = 300;
  double max_volume = 8.5;

  // scannet-like -> 300, arkit-like -> 500, custom -> `custom_min_points`; 8.5 m^3 cap for all.
  static BoxFilterConfig for_profile(DatasetProfile profile, std::int64_t custom_min_points);
};

// Size is the per-axis extent of the member vertices. Midpoint mode centers the box on the
// extent (it then encloses every vertex); mean mode uses the per-axis mean position.
AxisAlignedBox3D box_from_segment(const CompleteSegment3D& segment, const CanonicalCloud& canon,
                                  CenterMode mode = CenterMode::Midpoint);

// Drops boxes with fewer than min_points points or a volume above max_volume; keeps order.
std::vector<AxisAlignedBox3D> filter_boxes(std::span<const AxisAlignedBox3D> boxes,
                                           const BoxFilterConfig& cfg);

struct BoxRecord {
  std::string scene_id;
  AxisAlignedBox3D box;
};

// JSON lines: {scene_id, segment_id, center:[3], size:[3], n_points}.
std::string box_to_json_line(const std::string& scene_id, const AxisAlignedBox3D& box);
std::string boxes_to_jsonl(const std::string& scene_id, std::span<const AxisAlignedBox3D> boxes);
std::vector<BoxRecord> parse_boxes_jsonl(const std::string& text, const std::string& origin);
std::vector<BoxRecord> read_boxes_jsonl(const std::filesystem::path& path);

}  // namespace pbox
