#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pseudobox/boxes.hpp"
#include "pseudobox/graph.hpp"
#include "pseudobox/ingest.hpp"

namespace pbox {

enum class KMode { Fixed, Components };
enum class CanonicalChoice { Auto, Voxel, Mesh };

// Every tunable of the pipeline. Keys are "<section>.<name>" as in the config file.
struct PipelineConfig {
  // ingest
  size_t target_frames = 300;
  SegmentFilterConfig filter;
  // lift
  CanonicalChoice canonical = CanonicalChoice::Auto;
  double voxel_cell = 0.05;
  double snap_radius = 0.1;
  // graph
  double theta = 0.3;
  double graph_cell = 0.2;
  WalkConfig walk{.deterministic = false};
  // cluster
  size_t k = 100;
  KMode k_mode = KMode::Fixed;
  size_t max_iters = 300;
  size_t restarts = 10;
  double link_radius = 0.1;
  // meshref
  bool msr_enabled = false;
  double msr_k = 0.15;
  std::uint32_t msr_min_size = 50;
  double msr_min_overlap = 0.0;
  // boxes
  std::string profile = "auto";  // auto takes the manifest's profile
  std::int64_t custom_min_points = 300;
  double max_volume = 8.5;
  CenterMode center = CenterMode::Midpoint;
  // eval
  std::vector<double> thresholds{0.25, 0.5};
  // run
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = machine parallelism
  bool deterministic = false;
  bool dump_nodes = false;
  bool dump_graph = false;
  bool dump_segments = false;
  bool dump_embeddings = false;

  // Throws ConfigError on an unknown key, unparsable value or out-of-range setting.
  void set(const std::string& key, const std::string& value);
  // Applies "key=value".
  void apply_override(const std::string& assignment);
  void validate() const;

  CanonicalMode canonical_mode() const;
  BoxFilterConfig box_filter(DatasetProfile manifest_profile) const;
  WalkConfig walk_config() const;

  // key = value lines, one per tunable, grouped by section.
  std::string to_text() const;

  static PipelineConfig parse(const std::string& text, const std::string& origin = "<config>");
  static PipelineConfig from_file(const std::filesystem::path& path);
};

// Thread count after the PSEUDOBOX_THREADS override; 0 leaves the OpenMP default.
int effective_threads(const PipelineConfig& cfg);

}  // namespace pbox
