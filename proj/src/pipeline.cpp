#include "pseudobox/pipeline.hpp"

#include <chrono>
#include <sstream>

#include <omp.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

#include "parallel.hpp"
#include "pseudobox/error.hpp"
#include "pseudobox/io.hpp"
#include "pseudobox/meshref.hpp"
#include "pseudobox/semalign.hpp"

namespace pbox {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class StageTimer {
 public:
  explicit StageTimer(SceneResult& result) : result_(result) {}

  // Runs fn as stage `name`; `count` maps its result to the output cardinality.
  template <typename Fn, typename Count>
  auto run(const std::string& name, size_t inputs, Fn&& fn, Count&& count) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto out = fn();
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
      result_.stages.push_back({name, dt.count(), inputs, count(out)});
      return out;
    } catch (const ConfigError&) {
      spdlog::error("[{}] stage {} failed", result_.scene_id, name);
      throw;
    } catch (const IoError&) {
      spdlog::error("[{}] stage {} failed", result_.scene_id, name);
      throw;
    } catch (const PipelineError&) {
      throw;
    } catch (const std::exception& e) {
      throw PipelineError(name, e.what());
    }
  }

 private:
  SceneResult& result_;
};

template <typename T>
size_t size_of(const T& v) {
  return v.size();
}

fs::path manifest_for(const fs::path& scene) {
  return fs::is_directory(scene) ? scene / "manifest.json" : scene;
}

// Files written by run_pipeline, removed again when a later step fails.
class OutputTransaction {
 public:
  void write(const fs::path& path, const std::string& contents) {
    io::write_text_atomic(path, contents);
    written_.push_back(path);
  }
  void write_emb1(const fs::path& path, const io::EmbeddingFile& file) {
    io::write_emb1(path, file);
    written_.push_back(path);
  }
  void make_dir(const fs::path& dir) {
    if (fs::exists(dir)) return;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
    dirs_.push_back(dir);
  }
  void commit() {
    written_.clear();
    dirs_.clear();
  }
  ~OutputTransaction() {
    std::error_code ec;
    for (auto it = written_.rbegin(); it != written_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);  // only if empty
  }

 private:
  std::vector<fs::path> written_;
  std::vector<fs::path> dirs_;
};

std::string dump_nodes(const SceneResult& r) {
  std::ostringstream os;
  for (const auto& n : r.nodes) {
    os << json{{"node_id", n.node_id}, {"frame", n.frame_index}, {"seg2d", n.segment_id},
               {"n_points", n.points.size()}}
              .dump()
       << "\n";
  }
  return os.str();
}

std::string dump_graph(const SceneResult& r) {
  std::ostringstream os;
  for (const auto& [a, b] : r.graph.edges()) os << a << " " << b << "\n";
  return os.str();
}

std::string dump_segments(const SceneResult& r) {
  std::ostringstream os;
  for (const auto& s : r.segments) {
    os << json{{"segment_id", s.id}, {"n_points", s.points.size()}, {"node_ids", s.node_ids}}
              .dump()
       << "\n";
  }
  return os.str();
}

// EMB1 with the frame field holding the node id.
io::EmbeddingFile dump_embeddings(const SceneResult& r) {
  io::EmbeddingFile f;
  f.dim = static_cast<std::uint32_t>(r.embeddings.cols());
  for (size_t i = 0; i < r.embeddings.rows(); ++i) {
    const auto row = r.embeddings.row(i);
    f.records.push_back({static_cast<std::uint32_t>(i), 0, std::vector<float>(row.begin(), row.end())});
  }
  return f;
}

std::string stage_log(const SceneResult& r) {
  std::ostringstream os;
  double total = 0.0;
  for (const auto& s : r.stages) {
    char line[256];
    std::snprintf(line, sizeof line, "scene=%s stage=%s seconds=%.6f in=%zu out=%zu\n",
                  r.scene_id.c_str(), s.name.c_str(), s.seconds, s.inputs, s.outputs);
    os << line;
    total += s.seconds;
  }
  char line[160];
  std::snprintf(line, sizeof line, "scene=%s total_seconds=%.6f boxes=%zu\n", r.scene_id.c_str(),
                total, r.boxes.size());
  os << line;
  return os.str();
}

}  // namespace

SceneResult process_scene(const Scene& scene, const PipelineConfig& cfg) {
  cfg.validate();
  SceneResult r;
  r.scene_id = scene.manifest.scene_id;
  StageTimer stage(r);

  const auto chosen = stage.run(
      "select_frames", scene.frames.size(),
      [&] { return select_frames(scene, cfg.target_frames); }, size_of<std::vector<size_t>>);

  const auto raw = stage.run(
      "lift_segments", chosen.size(),
      [&] {
        std::vector<std::vector<RawSegment>> per_frame(chosen.size());
        detail::FirstError err;
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < static_cast<long>(chosen.size()); ++i) {
          try {
            const auto& frame = scene.frames[chosen[i]];
            SegmentMask2D mask = frame.mask;
            clear_ids(mask, frame.record.ignore_ids);
            mask = filter_segments_2d(mask, frame.depth, cfg.filter);
            per_frame[i] = lift_frame_segments(frame, mask);
          } catch (...) {
            err.capture(i);
          }
        }
        err.rethrow();
        std::vector<RawSegment> all;
        for (auto& f : per_frame) {
          for (auto& s : f) all.push_back(std::move(s));
        }
        return all;
      },
      size_of<std::vector<RawSegment>>);

  const auto mode = cfg.canonical_mode();
  if (mode == CanonicalMode::MeshVertices && !scene.mesh) {
    throw ConfigError("mesh canonical cloud requested but scene '" + r.scene_id + "' has no mesh");
  }
  const auto canon = stage.run(
      "canonical_cloud", raw.size(),
      [&] {
        return build_canonical_cloud(scene, raw, mode, cfg.voxel_cell,
                                     std::max(cfg.snap_radius, cfg.voxel_cell));
      },
      [](const CanonicalCloud& c) { return c.size(); });

  r.nodes = stage.run(
      "standardize", raw.size(),
      [&] {
        return canon.empty() ? std::vector<PartialSegment3D>{}
                             : standardize_segments(raw, canon, cfg.snap_radius);
      },
      size_of<std::vector<PartialSegment3D>>);

  const VoxelGridSpec grid(cfg.graph_cell);
  r.graph = stage.run(
      "build_edges", r.nodes.size(), [&] { return build_edges(r.nodes, canon, grid, cfg.theta); },
      [](const SegmentGraph& g) { return g.edge_count(); });

  r.embeddings = stage.run(
      "embed_graph", r.graph.node_count(),
      [&] {
        return r.graph.node_count() == 0 ? EmbeddingMatrix(0, cfg.walk.dimension)
                                         : embed_graph(r.graph, cfg.walk_config());
      },
      [](const EmbeddingMatrix& m) { return m.rows(); });

  const size_t k = cfg.k_mode == KMode::Components ? connected_component_count(r.graph)
                                                   : std::min(cfg.k, r.nodes.size());
  const auto assignment = stage.run(
      "kmeans", r.embeddings.rows(),
      [&] {
        if (r.embeddings.rows() == 0) return ClusterAssignment{};
        return kmeans_best_of(r.embeddings, k, cfg.seed, cfg.max_iters, cfg.restarts);
      },
      [](const ClusterAssignment& a) { return a.k; });

  const auto labels = stage.run(
      "assign_points", r.nodes.size(),
      [&] { return assign_points_majority(r.nodes, assignment); }, size_of<VertexClusterMap>);

  r.segments = stage.run(
      "split_components", labels.size(),
      [&] {
        auto segs = split_connected_components(labels, canon, cfg.link_radius);
        attach_contributing_nodes(segs, r.nodes, assignment);
        return segs;
      },
      size_of<std::vector<CompleteSegment3D>>);

  if (cfg.msr_enabled) {
    if (!scene.mesh) throw ConfigError("msr.enabled needs a scene mesh ('" + r.scene_id + "')");
    const auto mesh_segments = stage.run(
        "segment_mesh", scene.mesh->vertices.size(),
        [&] { return segment_mesh_felzenszwalb(*scene.mesh, cfg.msr_k, cfg.msr_min_size); },
        size_of<std::vector<MeshSegment>>);
    r.segments = stage.run(
        "fuse_msr", mesh_segments.size() + r.segments.size(),
        [&] { return fuse_msr(*scene.mesh, mesh_segments, r.segments, canon, cfg.msr_min_overlap); },
        size_of<std::vector<CompleteSegment3D>>);
  }

  const auto raw_boxes = stage.run(
      "boxes", r.segments.size(),
      [&] {
        std::vector<AxisAlignedBox3D> out;
        out.reserve(r.segments.size());
        for (const auto& s : r.segments) out.push_back(box_from_segment(s, canon, cfg.center));
        return out;
      },
      size_of<std::vector<AxisAlignedBox3D>>);

  r.boxes = stage.run(
      "filter_boxes", raw_boxes.size(),
      [&] { return filter_boxes(raw_boxes, cfg.box_filter(scene.manifest.profile)); },
      size_of<std::vector<AxisAlignedBox3D>>);
  return r;
}

SceneResult run_scene(const fs::path& scene_path, const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const Scene scene = load_scene(manifest_for(scene_path));
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  auto r = process_scene(scene, cfg);
  r.stages.insert(r.stages.begin(),
                  StageRecord{"load_scene", dt.count(), 1, scene.frames.size()});
  return r;
}

std::vector<SceneResult> run_pipeline(std::span<const fs::path> scenes, const PipelineConfig& cfg,
                                      const fs::path& out_dir) {
  cfg.validate();
  if (scenes.empty()) throw ConfigError("no scene given");
  std::vector<SceneResult> results(scenes.size());
  detail::FirstError err;
#pragma omp parallel for schedule(dynamic) if (scenes.size() > 1)
  for (long i = 0; i < static_cast<long>(scenes.size()); ++i) {
    try {
      results[i] = run_scene(scenes[i], cfg);
      spdlog::info("[{}] {} boxes", results[i].scene_id, results[i].boxes.size());
    } catch (...) {
      err.capture(i);
    }
  }
  err.rethrow();

  OutputTransaction tx;
  tx.make_dir(out_dir);
  std::string combined;
  std::string log = "# pseudobox run\n" + cfg.to_text() + "\n";
  for (const auto& r : results) {
    const auto dir = scenes.size() > 1 ? out_dir / r.scene_id : out_dir;
    if (scenes.size() > 1) tx.make_dir(dir);
    const auto lines = boxes_to_jsonl(r.scene_id, r.boxes);
    combined += lines;
    const auto scene_log = stage_log(r);
    log += scene_log;
    if (scenes.size() > 1) {
      tx.write(dir / "boxes.jsonl", lines);
      tx.write(dir / "run.log", scene_log);
    }
    if (cfg.dump_nodes) tx.write(dir / "nodes.jsonl", dump_nodes(r));
    if (cfg.dump_graph) tx.write(dir / "graph.txt", dump_graph(r));
    if (cfg.dump_segments) tx.write(dir / "segments.jsonl", dump_segments(r));
    if (cfg.dump_embeddings) tx.write_emb1(dir / "embeddings.emb1", dump_embeddings(r));
  }
  tx.write(out_dir / "boxes.jsonl", combined);
  tx.write(out_dir / "run.log", log);
  tx.commit();
  return results;
}

EvalReport run_eval(const fs::path& pred, const fs::path& gt, std::span<const double> thresholds,
                    const std::optional<fs::path>& out_dir) {
  for (double t : thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("IoU thresholds must lie in (0, 1]");
  }
  const auto preds = read_boxes_jsonl(pred);
  const auto gts = read_boxes_jsonl(gt);
  auto report = evaluate(preds, gts, thresholds);
  if (out_dir) {
    OutputTransaction tx;
    tx.make_dir(*out_dir);
    tx.write(*out_dir / "report.json", report.to_json());
    tx.write(*out_dir / "report.txt", report.to_text());
    tx.commit();
  }
  return report;
}

std::string run_classify(const fs::path& boxes, const fs::path& features,
                         const fs::path& prompt_bank, const std::optional<fs::path>& out,
                         const ClassifyOptions& options) {
  const auto records = read_boxes_jsonl(boxes);
  const auto table = load_embedding_table(features, prompt_bank);
  TextPromptBank bank{table.class_names, table.class_embeddings, options.temperature};
  bank.validate();
  if (table.dim != bank.dimension()) {
    throw ConfigError("segment features have dimension " + std::to_string(table.dim) +
                      " but the prompt bank has " + std::to_string(bank.dimension()));
  }
  std::ostringstream os;
  for (const auto& rec : records) {
    json line = json::parse(box_to_json_line(rec.scene_id, rec.box));
    std::vector<FeatureVector> feats;
    for (const auto& [key, f] : table.segments) {
      if (static_cast<std::int64_t>(key.second) == rec.box.segment_id) feats.push_back(f);
    }
    if (feats.empty()) {
      spdlog::warn("no features for box {} of scene {}", rec.box.segment_id, rec.scene_id);
      line["class"] = nullptr;
      line["prob"] = nullptr;
      line["topk"] = json::array();
    } else {
      const auto probs = ov_classify(average_box_feature(feats), bank);
      const auto best = top_k(probs, std::max<size_t>(1, options.top_k));
      line["class"] = bank.class_names[best[0].class_index];
      line["prob"] = best[0].prob;
      json top = json::array();
      for (const auto& s : best) top.push_back({{"class", bank.class_names[s.class_index]}, {"prob", s.prob}});
      line["topk"] = top;
    }
    os << line.dump() << "\n";
  }
  const auto text = os.str();
  if (out) io::write_text_atomic(*out, text);
  return text;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 1;
  if (dynamic_cast<const IoError*>(&e)) return 2;
  return 3;
}

void apply_thread_setting(const PipelineConfig& cfg) {
  if (const int n = effective_threads(cfg); n > 0) omp_set_num_threads(n);
}

}  // namespace pbox
