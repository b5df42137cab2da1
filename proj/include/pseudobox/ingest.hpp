#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pseudobox/geom.hpp"
#include "pseudobox/mesh.hpp"

namespace pbox {

enum class DatasetProfile { ScanNetLike, ArkitLike, Custom };

DatasetProfile parse_profile(const std::string& name);
std::string to_string(DatasetProfile profile);

struct FrameRecord {
  int index = 0;  // chronological
  CameraIntrinsics intrinsics;
  CameraPose pose;
  std::string depth_path;
  std::string mask_path;
  std::optional<std::string> gray_path;
  // Segment ids treated as background in this frame (floor, walls, ...).
  std::vector<std::uint32_t> ignore_ids;
};

struct SceneManifest {
  std::string scene_id;
  DatasetProfile profile = DatasetProfile::Custom;
  std::vector<FrameRecord> frames;
  std::optional<std::string> mesh_path;
  std::optional<std::string> embeddings_path;
  // Directory that relative paths are resolved against.
  std::filesystem::path root;

  std::filesystem::path resolve(const std::string& rel) const;
};

// Per-pixel 2D segment ids; 0 is background.
struct SegmentMask2D {
  int width = 0;
  int height = 0;
  int frame_index = 0;
  std::vector<std::uint32_t> ids;

  SegmentMask2D() = default;
  SegmentMask2D(int w, int h, int frame = 0)
      : width(w), height(h), frame_index(frame), ids(static_cast<size_t>(w) * h, 0) {}

  std::uint32_t at(int u, int v) const { return ids[static_cast<size_t>(v) * width + u]; }
  std::uint32_t& at(int u, int v) { return ids[static_cast<size_t>(v) * width + u]; }

  // Sorted distinct non-zero ids.
  std::vector<std::uint32_t> segment_ids() const;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int u, int v) const { return pixels[static_cast<size_t>(v) * width + u]; }
};

struct EmbeddingTable {
  int dim = 0;
  std::map<std::pair<std::uint32_t, std::uint32_t>, Eigen::VectorXd> segments;  // (frame, segment id)
  std::vector<std::string> class_names;
  std::vector<Eigen::VectorXd> class_embeddings;
};

// Reads an EMB1 file of segment features; when `prompt_bank` is given, also reads the class
// prompt bank and its sidecar list of names (<bank>.json).
EmbeddingTable load_embedding_table(const std::filesystem::path& segments,
                                    const std::optional<std::filesystem::path>& prompt_bank = {});

struct LoadedFrame {
  FrameRecord record;
  DepthMap depth;
  SegmentMask2D mask;
  std::optional<GrayImage> gray;
};

struct Scene {
  SceneManifest manifest;
  std::vector<LoadedFrame> frames;
  std::optional<TriangleMesh> mesh;
  std::optional<EmbeddingTable> embeddings;
};

SceneManifest read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path, const SceneManifest& manifest);

// Reads and validates the manifest and every raster it references. Depth is converted from
// millimeters to meters. All failures are IoError naming the offending path.
Scene load_scene(const std::filesystem::path& manifest_path);

// Variance of the 3x3 Laplacian (center 4, cross neighbors -1) over interior pixels.
double sharpness_score(const GrayImage& image);

// Positions (into `sharpness`, which is in chronological order) of the selected frames,
// ascending. Each round splits the unchosen frames into equal-cardinality chronological runs
// and takes the sharpest of each run (earliest on ties).
std::vector<size_t> select_frames(std::span<const double> sharpness, size_t target);

// Frame positions within scene.frames. Without gray images every frame scores equally,
// which degenerates to uniform sampling.
std::vector<size_t> select_frames(const Scene& scene, size_t target);

struct SegmentFilterConfig {
  int min_box_px = 30;
  double min_depth_ratio = 0.02;
};

// Clears segments whose bounding box is thinner than min_box_px or whose valid-depth pixel
// count over bounding-box area is below min_depth_ratio. Survivors keep their ids.
SegmentMask2D filter_segments_2d(const SegmentMask2D& mask, const DepthMap& depth,
                                 const SegmentFilterConfig& cfg = {});

// Zeroes every pixel whose id is listed.
void clear_ids(SegmentMask2D& mask, std::span<const std::uint32_t> ids);

}  // namespace pbox
