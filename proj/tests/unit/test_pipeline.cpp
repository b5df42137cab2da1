#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "support.hpp"

#include "json.hpp"
#include "pseudobox/error.hpp"
#include "pseudobox/io.hpp"
#include "pseudobox/pipeline.hpp"
#include "pseudobox/synth.hpp"

using namespace pbox;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string err;
};

// Runs the CLI with stderr captured to a file.
Run cli(const std::string& args, const fs::path& scratch) {
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string(PSEUDOBOX_CLI) + " " + args + " 2> \"" + err.string() + "\" > \"" +
                          (scratch / "stdout.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = io::read_text(err);
  return r;
}

fs::path small_synth(const fs::path& dir, std::uint64_t seed, size_t objects) {
  synth::RenderConfig r;
  r.width = 320;
  r.height = 240;
  const auto scene = synth::generate_scene(seed, objects, 6.0, 8, r);
  const auto views = synth::render_depth_and_masks(scene, r);
  synth::write_scene_dir(scene, views, dir, {true, 0.05, DatasetProfile::Custom});
  return dir;
}

const char* kFlags = "--set cluster.k_mode=components --set boxes.profile=custom --set boxes.min_points=20";

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = PipelineConfig::parse(
      "# comment\nseed = 7\n[graph]\ntheta = 0.4  # inline\n[cluster]\nk_mode = components\n"
      "[eval]\nthresholds = 0.1, 0.9\n");
  CHECK(cfg.seed == 7);
  CHECK(cfg.theta == 0.4);
  CHECK(cfg.k_mode == KMode::Components);
  CHECK(cfg.thresholds == std::vector<double>{0.1, 0.9});
  CHECK_FALSE(cfg.deterministic);
  CHECK_FALSE(cfg.walk_config().deterministic);

  const auto round = PipelineConfig::parse(cfg.to_text());
  CHECK(round.to_text() == cfg.to_text());

  PipelineConfig c;
  c.apply_override("run.deterministic=true");
  CHECK(c.walk_config().deterministic);
  CHECK_THROWS_AS(c.apply_override("nonsense"), ConfigError);
  CHECK_THROWS_AS(c.set("graph.nope", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("graph.theta", "abc"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("[graph]\ntheta = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("msr.enabled = true\nlift.canonical = voxel\n"), ConfigError);
  CHECK_THROWS_AS(PipelineConfig::parse("boxes.min_points = 0\n"), ConfigError);
  CHECK(c.canonical_mode() == CanonicalMode::VoxelCentroids);
  c.set("msr.enabled", "true");
  CHECK(c.canonical_mode() == CanonicalMode::MeshVertices);
}

TEST_CASE("thread override from the environment") {
  PipelineConfig cfg;
  cfg.threads = 3;
  ::unsetenv("PSEUDOBOX_THREADS");
  CHECK(effective_threads(cfg) == 3);
  ::setenv("PSEUDOBOX_THREADS", "2", 1);
  CHECK(effective_threads(cfg) == 2);
  ::setenv("PSEUDOBOX_THREADS", "x", 1);
  CHECK_THROWS_AS(effective_threads(cfg), ConfigError);
  ::unsetenv("PSEUDOBOX_THREADS");
}

TEST_CASE("gen, eval and run log through the CLI") {
  testing::TempDir tmp("pipe");
  const auto scene = small_synth(tmp / "scene", 3, 1);
  const auto out = tmp / "out";
  const auto r = cli("-q gen -s " + scene.string() + " -o " + out.string() + " " + kFlags +
                         " --set dump.nodes=true --set dump.graph=true --set dump.segments=true"
                         " --set dump.embeddings=true --deterministic",
                     tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto boxes = read_boxes_jsonl(out / "boxes.jsonl");
  CHECK(boxes.size() == 1);

  const auto log = io::read_text(out / "run.log");
  for (const char* stage : {"load_scene", "select_frames", "lift_segments", "canonical_cloud",
                            "standardize", "build_edges", "embed_graph", "kmeans",
                            "assign_points", "split_components", "boxes", "filter_boxes"})
    CHECK_MESSAGE(log.find(std::string("stage=") + stage + " ") != std::string::npos, stage);
  CHECK(log.find("in=") != std::string::npos);
  CHECK(log.find("seconds=") != std::string::npos);

  const auto nodes = io::read_text(out / "nodes.jsonl");
  CHECK(nlohmann::json::parse(nodes.substr(0, nodes.find('\n'))).contains("seg2d"));
  CHECK(fs::exists(out / "graph.txt"));
  CHECK(fs::exists(out / "segments.jsonl"));
  CHECK(io::read_emb1(out / "embeddings.emb1").dim == 64);

  const auto rep = tmp / "report";
  const auto e = cli("eval --pred " + (out / "boxes.jsonl").string() + " --gt " +
                         (scene / "gt.jsonl").string() + " -o " + rep.string(),
                     tmp.path());
  REQUIRE_MESSAGE(e.code == 0, e.err);
  const auto j = nlohmann::json::parse(io::read_text(rep / "report.json"));
  CHECK(j["pooled"][0]["precision"] == 1.0);
  CHECK(j["pooled"][0]["recall"] == 1.0);
  CHECK(fs::exists(rep / "report.txt"));

  CHECK(cli("eval --pred " + (out / "boxes.jsonl").string() + " --gt " + (scene / "gt.jsonl").string() +
                " --thresholds 0,0.5",
            tmp.path())
            .code == 1);
}

TEST_CASE("eval of an empty prediction file") {
  testing::TempDir tmp("pipe");
  const auto scene = synth::generate_scene(4, 3, 6.0);
  io::write_text_atomic(tmp / "gt.jsonl", synth::ground_truth_boxes(scene));
  io::write_text_atomic(tmp / "pred.jsonl", "");
  const auto report = run_eval(tmp / "pred.jsonl", tmp / "gt.jsonl", std::vector<double>{0.25, 0.5});
  CHECK(report.at(0.25).precision() == 0.0);
  CHECK(report.at(0.25).recall() == 0.0);
  const auto same = run_eval(tmp / "gt.jsonl", tmp / "gt.jsonl", std::vector<double>{0.25, 0.5});
  CHECK(same.at(0.5).precision() == 1.0);
  CHECK(same.at(0.5).recall() == 1.0);
  io::write_text_atomic(tmp / "bad.jsonl", "{oops\n");
  CHECK(cli("eval --pred " + (tmp / "bad.jsonl").string() + " --gt " + (tmp / "gt.jsonl").string(),
            tmp.path())
            .code == 2);
}

TEST_CASE("missing depth file exits 2 and names the path") {
  testing::TempDir tmp("pipe");
  const auto scene = small_synth(tmp / "scene", 5, 2);
  const auto victim = scene / "depth" / "000003.pgm";
  REQUIRE(fs::exists(victim));
  fs::remove(victim);
  const auto r = cli("gen -s " + scene.string() + " -o " + (tmp / "out").string(), tmp.path());
  CHECK(r.code == 2);
  CHECK(r.err.find("000003.pgm") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "out" / "boxes.jsonl"));
}

TEST_CASE("config errors exit 1") {
  testing::TempDir tmp("pipe");
  const auto scene = small_synth(tmp / "scene", 5, 1);
  CHECK(cli("gen -s " + scene.string() + " -o " + (tmp / "out").string() + " --set graph.theta=2",
            tmp.path())
            .code == 1);
  CHECK(cli("gen -s " + scene.string() + " -o " + (tmp / "out").string() + " --set bogus.key=1",
            tmp.path())
            .code == 1);
  CHECK_FALSE(fs::exists(tmp / "out" / "boxes.jsonl"));
}

TEST_CASE("deterministic runs are byte identical") {
  testing::TempDir tmp("pipe");
  const auto scene = small_synth(tmp / "scene", 6, 4);
  for (const char* name : {"a", "b"}) {
    const auto r = cli("gen -s " + scene.string() + " -o " + (tmp / name).string() + " " + kFlags +
                           " --deterministic",
                       tmp.path());
    REQUIRE_MESSAGE(r.code == 0, r.err);
  }
  const auto a = io::read_text(tmp / "a" / "boxes.jsonl");
  CHECK_FALSE(a.empty());
  CHECK(a == io::read_text(tmp / "b" / "boxes.jsonl"));
}

TEST_CASE("several scenes get their own directories") {
  testing::TempDir tmp("pipe");
  const auto s1 = small_synth(tmp / "s1", 7, 2);
  const auto s2 = small_synth(tmp / "s2", 8, 3);
  PipelineConfig cfg;
  cfg.set("cluster.k_mode", "components");
  cfg.set("boxes.profile", "custom");
  cfg.set("boxes.min_points", "20");
  const std::vector<fs::path> scenes{s1, s2};
  const auto results = run_pipeline(scenes, cfg, tmp / "out");
  REQUIRE(results.size() == 2);
  CHECK(fs::exists(tmp / "out" / "synth_7" / "boxes.jsonl"));
  CHECK(fs::exists(tmp / "out" / "synth_8" / "run.log"));
  const auto all = read_boxes_jsonl(tmp / "out" / "boxes.jsonl");
  CHECK(all.size() == results[0].boxes.size() + results[1].boxes.size());
}

TEST_CASE("classify through the CLI") {
  testing::TempDir tmp("pipe");
  AxisAlignedBox3D a, b;
  a.segment_id = 1;
  a.size = Eigen::Vector3d(1, 1, 1);
  b.segment_id = 2;
  b.size = Eigen::Vector3d(1, 1, 1);
  const std::vector<AxisAlignedBox3D> boxes{a, b};
  io::write_text_atomic(tmp / "boxes.jsonl", boxes_to_jsonl("s", boxes));
  io::EmbeddingFile feats{2, {{0, 1, {1.0f, 0.0f}}, {3, 1, {1.0f, 0.2f}}}};
  io::write_emb1(tmp / "feats.emb1", feats);
  io::EmbeddingFile bank{2, {{io::kPromptFrame, 0, {1.0f, 0.0f}}, {io::kPromptFrame, 1, {0.0f, 1.0f}}}};
  io::write_emb1(tmp / "bank.emb1", bank);
  io::write_text_atomic(tmp / "bank.emb1.json", "[\"chair\", \"lamp\"]");

  const auto r = cli("classify --boxes " + (tmp / "boxes.jsonl").string() + " --features " +
                         (tmp / "feats.emb1").string() + " --bank " + (tmp / "bank.emb1").string() +
                         " -o " + (tmp / "out.jsonl").string(),
                     tmp.path());
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto text = io::read_text(tmp / "out.jsonl");
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  const auto second = nlohmann::json::parse(text.substr(text.find('\n') + 1));
  CHECK(first["class"] == "chair");
  CHECK(first["topk"].size() == 2);
  CHECK(second["class"].is_null());
  CHECK(r.err.find("no features") != std::string::npos);

  // a zero feature vector is a domain error, exit 3
  io::EmbeddingFile zero{2, {{0, 1, {0.0f, 0.0f}}}};
  io::write_emb1(tmp / "zero.emb1", zero);
  CHECK(cli("classify --boxes " + (tmp / "boxes.jsonl").string() + " --features " +
                (tmp / "zero.emb1").string() + " --bank " + (tmp / "bank.emb1").string(),
            tmp.path())
            .code == 3);
}

TEST_CASE("mesh mode without a mesh is a config error") {
  testing::TempDir tmp("pipe");
  const auto scene = synth::generate_scene(9, 1, 6.0);
  synth::RenderConfig r;
  r.width = 64;
  r.height = 48;
  synth::write_scene_dir(scene, synth::render_depth_and_masks(scene, r), tmp / "s");
  PipelineConfig cfg;
  cfg.set("msr.enabled", "true");
  CHECK_THROWS_AS(run_scene(tmp / "s", cfg), ConfigError);
}
