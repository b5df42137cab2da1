#include "pseudobox/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <random>

#include "pseudobox/error.hpp"
#include "pseudobox/io.hpp"

namespace pbox::synth {

namespace fs = std::filesystem;

void RenderConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("render raster must be positive");
  if (!(near_clip > 0.0 && near_clip < far_clip)) throw ConfigError("render needs 0 < near < far");
  if (!(hfov_deg > 0.0 && hfov_deg < 180.0)) throw ConfigError("horizontal fov must lie in (0, 180)");
}

namespace {

constexpr double kObjectMinSide = 0.35;
constexpr double kObjectMaxSide = 1.0;
constexpr double kObjectMinHeight = 0.3;
constexpr double kObjectMaxHeight = 1.2;
constexpr double kObjectGap = 0.3;
constexpr double kCameraWallOffset = 0.3;
constexpr double kObjectRingClearance = 0.7;
constexpr int kPlacementAttempts = 5000;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

CameraIntrinsics make_intrinsics(const RenderConfig& cfg) {
  CameraIntrinsics k;
  k.width = cfg.width;
  k.height = cfg.height;
  k.fx = k.fy = 0.5 * cfg.width / std::tan(0.5 * cfg.hfov_deg * std::numbers::pi / 180.0);
  k.cx = 0.5 * cfg.width;
  k.cy = 0.5 * cfg.height;
  return k;
}

// Entry distance of the ray into the box, if it enters in front of the origin.
std::optional<std::pair<double, Eigen::Vector3d>> ray_box(const Point3& o, const Eigen::Vector3d& d,
                                                           const Point3& lo, const Point3& hi) {
  double t_in = -std::numeric_limits<double>::infinity();
  double t_out = std::numeric_limits<double>::infinity();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return std::nullopt;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > t_in) {
      t_in = t0;
      normal = Eigen::Vector3d::Zero();
      normal[a] = d[a] > 0.0 ? -1.0 : 1.0;
    }
    t_out = std::min(t_out, t1);
  }
  if (t_in > t_out || !(t_in > 0.0)) return std::nullopt;
  return std::make_pair(t_in, normal);
}

double albedo(std::uint32_t id) {
  if (id == 0) return 0.55;
  const double golden = 0.6180339887498949;
  return 0.3 + 0.6 * std::fmod(id * golden, 1.0);
}

void erode(SegmentMask2D& mask, int radius) {
  if (radius <= 0) return;
  const SegmentMask2D src = mask;
  for (int v = 0; v < src.height; ++v) {
    for (int u = 0; u < src.width; ++u) {
      const auto id = src.at(u, v);
      if (id == 0) continue;
      bool keep = true;
      for (int dv = -radius; dv <= radius && keep; ++dv) {
        for (int du = -radius; du <= radius; ++du) {
          const int uu = u + du;
          const int vv = v + dv;
          if (uu < 0 || vv < 0 || uu >= src.width || vv >= src.height) continue;
          if (src.at(uu, vv) != id) {
            keep = false;
            break;
          }
        }
      }
      if (!keep) mask.at(u, v) = 0;
    }
  }
}

void split_masks(SegmentMask2D& mask, double probability, std::mt19937_64& rng) {
  if (probability <= 0.0) return;
  struct Acc {
    double su = 0, sv = 0;
    long n = 0;
  };
  std::map<std::uint32_t, Acc> acc;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      const auto id = mask.at(u, v);
      if (id == 0) continue;
      auto& a = acc[id];
      a.su += u;
      a.sv += v;
      ++a.n;
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& [id, a] : acc) {
    const double roll = unit(rng);
    const double angle = unit(rng) * 2.0 * std::numbers::pi;
    if (roll >= probability) continue;
    const double cu = a.su / a.n;
    const double cv = a.sv / a.n;
    const double nu = std::cos(angle);
    const double nv = std::sin(angle);
    for (int v = 0; v < mask.height; ++v) {
      for (int u = 0; u < mask.width; ++u) {
        if (mask.at(u, v) == id && (u - cu) * nu + (v - cv) * nv > 0.0) {
          mask.at(u, v) = id + kSplitIdOffset;
        }
      }
    }
  }
}

void add_rect(TriangleMesh& mesh, const Point3& origin, const Eigen::Vector3d& eu,
              const Eigen::Vector3d& ev, const Eigen::Vector3d& normal, double spacing) {
  const int nu = std::max(1, static_cast<int>(std::ceil(eu.norm() / spacing - 1e-9)));
  const int nv = std::max(1, static_cast<int>(std::ceil(ev.norm() / spacing - 1e-9)));
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      mesh.vertices.push_back(origin + (i + 0.5) / nu * eu + (j + 0.5) / nv * ev);
      mesh.normals.push_back(normal);
    }
  }
  auto at = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * nu + i); };
  for (int j = 0; j + 1 < nv; ++j) {
    for (int i = 0; i + 1 < nu; ++i) {
      mesh.faces.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
      mesh.faces.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
    }
  }
}

}  // namespace

SyntheticScene generate_scene(std::uint64_t seed, size_t object_count, double room_size,
                              int camera_count, const RenderConfig& render) {
  render.validate();
  if (!(room_size > 2.0 * (kCameraWallOffset + kObjectRingClearance))) {
    throw ConfigError("room too small for the camera ring");
  }
  if (camera_count < 1) throw ConfigError("need at least one camera");
  SyntheticScene scene;
  scene.seed = seed;
  scene.scene_id = "synth_" + std::to_string(seed);
  scene.room = Eigen::Vector3d(room_size, room_size, 3.0);
  const Point3 center(0.5 * room_size, 0.5 * room_size, 0.0);
  const double ring = 0.5 * room_size - kCameraWallOffset;
  const double reach = ring - kObjectRingClearance;

  std::mt19937_64 rng(mix(seed, 0));
  std::uniform_real_distribution<double> side(kObjectMinSide, kObjectMaxSide);
  std::uniform_real_distribution<double> height(kObjectMinHeight, kObjectMaxHeight);
  std::uniform_real_distribution<double> pos(-reach, reach);
  for (size_t n = 0; n < object_count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const double sx = side(rng), sy = side(rng), sz = height(rng);
      const double px = pos(rng), py = pos(rng);
      // every footprint corner inside the clearance disc
      const double fx = std::abs(px) + 0.5 * sx;
      const double fy = std::abs(py) + 0.5 * sy;
      if (fx * fx + fy * fy > reach * reach) continue;
      bool clear = true;
      for (const auto& o : scene.objects) {
        if (std::abs(o.center.x() - (center.x() + px)) < 0.5 * (o.size.x() + sx) + kObjectGap &&
            std::abs(o.center.y() - (center.y() + py)) < 0.5 * (o.size.y() + sy) + kObjectGap) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      AxisAlignedBox3D box;
      box.center = Point3(center.x() + px, center.y() + py, 0.5 * sz);
      box.size = Eigen::Vector3d(sx, sy, sz);
      box.segment_id = static_cast<std::int64_t>(n + 1);
      box.n_points = 1;
      scene.objects.push_back(box);
      placed = true;
    }
    if (!placed) {
      throw DomainError("could not place object " + std::to_string(n + 1) + " after " +
                        std::to_string(kPlacementAttempts) + " attempts");
    }
  }

  const auto intr = make_intrinsics(render);
  const double cam_height = scene.room.z() - 0.6;
  const Point3 target(center.x(), center.y(), 0.3);
  for (int c = 0; c < camera_count; ++c) {
    const double a = 2.0 * std::numbers::pi * c / camera_count;
    const Point3 eye(center.x() + ring * std::cos(a), center.y() + ring * std::sin(a), cam_height);
    scene.cameras.push_back({intr, CameraPose::look_at(eye, target)});
  }
  return scene;
}

RayHit cast_pixel(const SyntheticScene& scene, const SyntheticCamera& cam, int u, int v,
                  const RenderConfig& cfg) {
  const auto& k = cam.intrinsics;
  const Eigen::Vector3d dir_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  const Eigen::Vector3d dir = cam.pose.rotation.transpose() * dir_cam;  // camera z component is 1
  const Point3 origin = cam.pose.center();

  RayHit hit;
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) continue;
    const double plane = dir[a] > 0.0 ? scene.room[a] : 0.0;
    const double t = (plane - origin[a]) / dir[a];
    if (t > 0.0 && t < best) {
      best = t;
      hit.normal = Eigen::Vector3d::Zero();
      hit.normal[a] = dir[a] > 0.0 ? -1.0 : 1.0;
      hit.id = 0;
    }
  }
  for (const auto& obj : scene.objects) {
    if (auto h = ray_box(origin, dir, obj.min_corner(), obj.max_corner()); h && h->first < best) {
      best = h->first;
      hit.normal = h->second;
      hit.id = static_cast<std::uint32_t>(obj.segment_id);
    }
  }
  if (!std::isfinite(best) || best < cfg.near_clip || best > cfg.far_clip) return {};
  hit.depth = best;
  return hit;
}

std::vector<RenderedView> render_depth_and_masks(const SyntheticScene& scene,
                                                 const RenderConfig& cfg) {
  cfg.validate();
  std::vector<RenderedView> views(scene.cameras.size());
#pragma omp parallel for schedule(dynamic)
  for (long c = 0; c < static_cast<long>(scene.cameras.size()); ++c) {
    const auto& cam = scene.cameras[c];
    const int w = cam.intrinsics.width;
    const int h = cam.intrinsics.height;
    RenderedView view{DepthMap(w, h), SegmentMask2D(w, h, static_cast<int>(c)),
                      GrayImage{w, h, std::vector<std::uint8_t>(static_cast<size_t>(w) * h, 0)}};
    const auto& k = cam.intrinsics;
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        const auto hit = cast_pixel(scene, cam, u, v, cfg);
        if (hit.depth <= 0.0) continue;
        view.depth.at(u, v) = hit.depth;
        view.mask.at(u, v) = hit.id;
        const Eigen::Vector3d ray =
            cam.pose.rotation.transpose() * Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        const double shade = albedo(hit.id) * (0.3 + 0.7 * std::abs(hit.normal.dot(ray.normalized())));
        view.gray.pixels[static_cast<size_t>(v) * w + u] =
            static_cast<std::uint8_t>(std::clamp(shade * 255.0, 0.0, 255.0));
      }
    }
    const auto& noise = scene.noise;
    std::mt19937_64 rng(mix(scene.seed, 100 + static_cast<std::uint64_t>(c)));
    if (noise.depth_sigma > 0.0) {
      std::normal_distribution<double> gauss(0.0, noise.depth_sigma);
      for (auto& d : view.depth.values) {
        if (d > 0.0) d = std::max(0.0, d + gauss(rng));
      }
    }
    erode(view.mask, noise.mask_erosion_px);
    split_masks(view.mask, noise.split_probability, rng);
    views[c] = std::move(view);
  }
  return views;
}

std::string ground_truth_boxes(const SyntheticScene& scene) {
  return boxes_to_jsonl(scene.scene_id, scene.objects);
}

TriangleMesh room_mesh(const SyntheticScene& scene, double spacing) {
  if (!(spacing > 0.0)) throw ConfigError("mesh spacing must be positive");
  TriangleMesh mesh;
  const double w = scene.room.x(), l = scene.room.y(), h = scene.room.z();
  const Eigen::Vector3d ex = Eigen::Vector3d::UnitX(), ey = Eigen::Vector3d::UnitY(),
                        ez = Eigen::Vector3d::UnitZ();
  add_rect(mesh, Point3(0, 0, 0), w * ex, l * ey, ez, spacing);
  add_rect(mesh, Point3(0, 0, 0), l * ey, h * ez, ex, spacing);
  add_rect(mesh, Point3(w, 0, 0), l * ey, h * ez, -ex, spacing);
  add_rect(mesh, Point3(0, 0, 0), w * ex, h * ez, ey, spacing);
  add_rect(mesh, Point3(0, l, 0), w * ex, h * ez, -ey, spacing);
  for (const auto& obj : scene.objects) {
    const Point3 lo = obj.min_corner();
    const Point3 hi = obj.max_corner();
    const Eigen::Vector3d s = obj.size;
    add_rect(mesh, Point3(lo.x(), lo.y(), hi.z()), s.x() * ex, s.y() * ey, ez, spacing);
    add_rect(mesh, lo, s.y() * ey, s.z() * ez, -ex, spacing);
    add_rect(mesh, Point3(hi.x(), lo.y(), lo.z()), s.y() * ey, s.z() * ez, ex, spacing);
    add_rect(mesh, lo, s.x() * ex, s.z() * ez, -ey, spacing);
    add_rect(mesh, Point3(lo.x(), hi.y(), lo.z()), s.x() * ex, s.z() * ez, ey, spacing);
  }
  return mesh;
}

fs::path write_scene_dir(const SyntheticScene& scene, const std::vector<RenderedView>& views,
                         const fs::path& dir, const WriteOptions& options) {
  if (views.size() != scene.cameras.size()) throw DomainError("one rendered view per camera expected");
  std::error_code ec;
  for (const char* sub : {"depth", "mask", "gray"}) {
    fs::create_directories(dir / sub, ec);
    if (ec) throw IoError((dir / sub).string(), "cannot create directory: " + ec.message());
  }
  SceneManifest m;
  m.scene_id = scene.scene_id;
  m.profile = options.profile;
  m.root = dir;
  for (size_t c = 0; c < views.size(); ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "%06zu.pgm", c);
    const auto& view = views[c];
    io::PgmImage depth{view.depth.width, view.depth.height, 65535, {}};
    depth.samples.resize(view.depth.values.size());
    for (size_t i = 0; i < depth.samples.size(); ++i) {
      depth.samples[i] = static_cast<std::uint16_t>(
          std::clamp(std::lround(view.depth.values[i] * 1000.0), 0L, 65535L));
    }
    io::write_pgm(dir / "depth" / name, depth);
    io::PgmImage mask{view.mask.width, view.mask.height, 65535, {}};
    mask.samples.assign(view.mask.ids.begin(), view.mask.ids.end());
    io::write_pgm(dir / "mask" / name, mask);
    io::PgmImage gray{view.gray.width, view.gray.height, 255, {}};
    gray.samples.assign(view.gray.pixels.begin(), view.gray.pixels.end());
    io::write_pgm(dir / "gray" / name, gray);

    FrameRecord r;
    r.index = static_cast<int>(c);
    r.intrinsics = scene.cameras[c].intrinsics;
    r.pose = scene.cameras[c].pose;
    r.depth_path = std::string("depth/") + name;
    r.mask_path = std::string("mask/") + name;
    r.gray_path = std::string("gray/") + name;
    m.frames.push_back(std::move(r));
  }
  if (options.with_mesh) {
    io::write_ply(dir / "mesh.ply", room_mesh(scene, options.mesh_spacing));
    m.mesh_path = "mesh.ply";
  }
  io::write_text_atomic(dir / "gt.jsonl", ground_truth_boxes(scene));
  const auto manifest = dir / "manifest.json";
  write_manifest(manifest, m);
  return manifest;
}

}  // namespace pbox::synth
