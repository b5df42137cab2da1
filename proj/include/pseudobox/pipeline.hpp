#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pseudobox/boxes.hpp"
#include "pseudobox/cluster.hpp"
#include "pseudobox/config.hpp"
#include "pseudobox/eval.hpp"
#include "pseudobox/graph.hpp"
#include "pseudobox/ingest.hpp"
#include "pseudobox/lift.hpp"

namespace pbox {

struct StageRecord {
  std::string name;
  double seconds = 0.0;
  size_t inputs = 0;
  size_t outputs = 0;
};

// Everything one scene run produced; intermediate results are kept for the optional dumps.
struct SceneResult {
  std::string scene_id;
  std::vector<StageRecord> stages;
  std::vector<PartialSegment3D> nodes;
  SegmentGraph graph;
  EmbeddingMatrix embeddings;
  std::vector<CompleteSegment3D> segments;
  std::vector<AxisAlignedBox3D> boxes;
};

// Runs every stage on an already loaded scene. Stage failures other than configuration or I/O
// errors are rethrown as PipelineError carrying the stage name.
SceneResult process_scene(const Scene& scene, const PipelineConfig& cfg);

// Loads and processes one manifest (a scene directory resolves to <dir>/manifest.json).
SceneResult run_scene(const std::filesystem::path& scene, const PipelineConfig& cfg);

// Runs every scene and writes boxes.jsonl, run.log and the requested dumps under out_dir.
// With more than one scene each gets out_dir/<scene_id>/ and out_dir/boxes.jsonl holds them
// all. On failure the files written so far are removed before the error propagates.
std::vector<SceneResult> run_pipeline(std::span<const std::filesystem::path> scenes,
                                      const PipelineConfig& cfg,
                                      const std::filesystem::path& out_dir);

// Writes report.json and report.txt under out_dir (when given) and returns the report.
EvalReport run_eval(const std::filesystem::path& pred, const std::filesystem::path& gt,
                    std::span<const double> thresholds,
                    const std::optional<std::filesystem::path>& out_dir = {});

struct ClassifyOptions {
  double temperature = 1.0;
  size_t top_k = 3;
};

// Boxes whose segment id has no feature get a null class and a warning. Returns the extended
// JSON lines and writes them to `out` when given.
std::string run_classify(const std::filesystem::path& boxes, const std::filesystem::path& features,
                         const std::filesystem::path& prompt_bank,
                         const std::optional<std::filesystem::path>& out,
                         const ClassifyOptions& options = {});

// 0 ok, 1 config error, 2 I/O error, 3 anything else.
int exit_code_for(const std::exception& e);

// Applies effective_threads() to OpenMP.
void apply_thread_setting(const PipelineConfig& cfg);

}  // namespace pbox
