#include "pseudobox/boxes.hpp"

#include <sstream>

#include "json.hpp"
#include "pseudobox/error.hpp"
#include "pseudobox/io.hpp"

namespace pbox {

using nlohmann::json;

AxisAlignedBox3D AxisAlignedBox3D::from_corners(const Point3& lo, const Point3& hi) {
  AxisAlignedBox3D b;
  b.center = 0.5 * (lo + hi);
  b.size = hi - lo;
  return b;
}

CenterMode parse_center_mode(const std::string& name) {
  if (name == "midpoint") return CenterMode::Midpoint;
  if (name == "mean") return CenterMode::Mean;
  throw ConfigError("unknown box center mode '" + name + "'");
}

BoxFilterConfig BoxFilterConfig::for_profile(DatasetProfile profile, std::int64_t custom_min_points) {
  BoxFilterConfig cfg;
  switch (profile) {
    case DatasetProfile::ScanNetLike: cfg.min_points = 300; break;
    case DatasetProfile::ArkitLike: cfg.min_points = 500; break;
    case DatasetProfile::Custom: cfg.min_points = custom_min_points; break;
  }
  if (cfg.min_points < 1) throw ConfigError("box min points must be at least 1");
  return cfg;
}

AxisAlignedBox3D box_from_segment(const CompleteSegment3D& segment, const CanonicalCloud& canon,
                                  CenterMode mode) {
  if (segment.points.empty()) throw DomainError("box of an empty segment");
  Point3 lo = canon[segment.points.front()];
  Point3 hi = lo;
  Point3 sum = Point3::Zero();
  for (auto idx : segment.points) {
    const auto& p = canon[idx];
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
    sum += p;
  }
  AxisAlignedBox3D box;
  box.size = hi - lo;
  box.center = mode == CenterMode::Midpoint ? Point3(0.5 * (lo + hi))
                                            : Point3(sum / static_cast<double>(segment.points.size()));
  box.segment_id = segment.id;
  box.n_points = static_cast<std::int64_t>(segment.points.size());
  return box;
}

std::vector<AxisAlignedBox3D> filter_boxes(std::span<const AxisAlignedBox3D> boxes,
                                           const BoxFilterConfig& cfg) {
  std::vector<AxisAlignedBox3D> out;
  for (const auto& b : boxes) {
    if (b.n_points < cfg.min_points || b.volume() > cfg.max_volume) continue;
    out.push_back(b);
  }
  return out;
}

std::string box_to_json_line(const std::string& scene_id, const AxisAlignedBox3D& box) {
  json j;
  j["scene_id"] = scene_id;
  j["segment_id"] = box.segment_id;
  j["center"] = {box.center.x(), box.center.y(), box.center.z()};
  j["size"] = {box.size.x(), box.size.y(), box.size.z()};
  j["n_points"] = box.n_points;
  return j.dump();
}

std::string boxes_to_jsonl(const std::string& scene_id, std::span<const AxisAlignedBox3D> boxes) {
  std::string out;
  for (const auto& b : boxes) {
    out += box_to_json_line(scene_id, b);
    out += '\n';
  }
  return out;
}

std::vector<BoxRecord> parse_boxes_jsonl(const std::string& text, const std::string& origin) {
  std::vector<BoxRecord> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      BoxRecord r;
      r.scene_id = j.at("scene_id").get<std::string>();
      r.box.segment_id = j.at("segment_id").get<std::int64_t>();
      const auto c = j.at("center").get<std::vector<double>>();
      const auto s = j.at("size").get<std::vector<double>>();
      if (c.size() != 3 || s.size() != 3) throw DomainError("center and size need 3 values");
      r.box.center = Point3(c[0], c[1], c[2]);
      r.box.size = Eigen::Vector3d(s[0], s[1], s[2]);
      if ((r.box.size.array() < 0.0).any()) throw DomainError("negative box size");
      r.box.n_points = j.at("n_points").get<std::int64_t>();
      out.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw IoError(origin, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<BoxRecord> read_boxes_jsonl(const std::filesystem::path& path) {
  return parse_boxes_jsonl(io::read_text(path), path.string());
}

}  // namespace pbox
