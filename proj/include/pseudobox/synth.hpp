#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pseudobox/boxes.hpp"
#include "pseudobox/geom.hpp"
#include "pseudobox/ingest.hpp"
#include "pseudobox/mesh.hpp"

namespace pbox::synth {

struct NoiseConfig {
  double depth_sigma = 0.0;        // meters, additive Gaussian
  int mask_erosion_px = 0;         // square structuring element radius
  double split_probability = 0.0;  // per (view, object)
};

struct RenderConfig {
  int width = 640;
  int height = 480;
  double near_clip = 0.1;
  double far_clip = 30.0;
  double hfov_deg = 80.0;

  void validate() const;
};

struct SyntheticCamera {
  CameraIntrinsics intrinsics;
  CameraPose pose;
};

struct SyntheticScene {
  std::string scene_id;
  std::uint64_t seed = 0;
  Eigen::Vector3d room = Eigen::Vector3d(6.0, 6.0, 3.0);  // floor [0,x]x[0,y], height z
  std::vector<AxisAlignedBox3D> objects;  // segment_id = object id (>= 1)
  std::vector<SyntheticCamera> cameras;
  NoiseConfig noise;
};

// Ids of split-off mask halves: original id + kSplitIdOffset.
inline constexpr std::uint32_t kSplitIdOffset = 1000;

// Non-overlapping floor-standing cuboids placed by seeded rejection sampling inside the camera
// ring, and `camera_count` cameras on a ring looking at the room center.
SyntheticScene generate_scene(std::uint64_t seed, size_t object_count, double room_size,
                              int camera_count = 8, const RenderConfig& render = {});

struct RayHit {
  double depth = 0.0;  // camera z; 0 if clipped
  std::uint32_t id = 0;
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
};

// Nearest hit of the ray through pixel (u, v) against room walls and objects, noiseless.
RayHit cast_pixel(const SyntheticScene& scene, const SyntheticCamera& cam, int u, int v,
                  const RenderConfig& cfg);

struct RenderedView {
  DepthMap depth;
  SegmentMask2D mask;
  GrayImage gray;
};

// One view per camera, rendered in parallel; scene.noise is applied with per-camera seeded RNGs.
std::vector<RenderedView> render_depth_and_masks(const SyntheticScene& scene,
                                                 const RenderConfig& cfg);

std::string ground_truth_boxes(const SyntheticScene& scene);

// Floor, four walls and the five exposed faces of every object, sampled on a grid of the given
// spacing with cell-centered vertices and face normals.
TriangleMesh room_mesh(const SyntheticScene& scene, double spacing = 0.05);

struct WriteOptions {
  bool with_mesh = false;
  double mesh_spacing = 0.05;
  DatasetProfile profile = DatasetProfile::Custom;
};

// Writes manifest.json, depth/, mask/, gray/, gt.jsonl and optionally mesh.ply.
// Returns the manifest path.
std::filesystem::path write_scene_dir(const SyntheticScene& scene,
                                      const std::vector<RenderedView>& views,
                                      const std::filesystem::path& dir,
                                      const WriteOptions& options = {});

}  // namespace pbox::synth
