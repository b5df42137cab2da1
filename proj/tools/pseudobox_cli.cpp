#include <cstdio>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "pseudobox/config.hpp"
#include "pseudobox/error.hpp"
#include "pseudobox/pipeline.hpp"
#include "pseudobox/synth.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw pbox::ConfigError("bad threshold '" + item + "'");
    }
  }
  if (out.empty()) throw pbox::ConfigError("no thresholds given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("pseudobox"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Class-agnostic 3D pseudo boxes from posed RGB-D frames and 2D instance masks"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "errors only");

  // gen
  auto* gen = app.add_subcommand("gen", "generate pseudo boxes for one or more scenes");
  std::vector<std::string> scenes;
  std::string out_dir;
  std::string config_path;
  std::vector<std::string> overrides;
  bool deterministic = false;
  int threads = -1;
  gen->add_option("-s,--scene", scenes, "scene directory or manifest.json")->required();
  gen->add_option("-o,--out", out_dir, "output directory")->required();
  gen->add_option("-c,--config", config_path, "config file")->check(CLI::ExistingFile);
  gen->add_option("--set", overrides, "override, key=value");
  gen->add_flag("--deterministic", deterministic, "serial graph training, reproducible output");
  gen->add_option("-j,--threads", threads, "worker threads (0 = all cores)");

  // eval
  auto* ev = app.add_subcommand("eval", "precision and recall of predicted boxes");
  std::string pred, gt, thresholds = "0.25,0.5", report_dir;
  ev->add_option("--pred", pred, "predicted boxes (JSON lines)")->required();
  ev->add_option("--gt", gt, "ground-truth boxes (JSON lines)")->required();
  ev->add_option("--thresholds", thresholds, "comma-separated IoU thresholds");
  ev->add_option("-o,--out", report_dir, "directory for report.json and report.txt");

  // classify
  auto* cls = app.add_subcommand("classify", "open-vocabulary class for every box");
  std::string boxes_path, features_path, bank_path, classified;
  pbox::ClassifyOptions copts;
  cls->add_option("--boxes", boxes_path, "box file (JSON lines)")->required();
  cls->add_option("--features", features_path, "EMB1 segment features")->required();
  cls->add_option("--bank", bank_path, "EMB1 prompt bank (names in <bank>.json)")->required();
  cls->add_option("-o,--out", classified, "output file (stdout if omitted)");
  cls->add_option("--topk", copts.top_k, "classes listed per box");
  cls->add_option("--temperature", copts.temperature, "softmax temperature");

  // synth
  auto* syn = app.add_subcommand("synth", "write a synthetic scene with ground truth");
  std::uint64_t seed = 0;
  size_t objects = 6;
  double room = 6.0;
  int cameras = 8;
  pbox::synth::NoiseConfig noise;
  bool with_mesh = false;
  std::string profile = "custom";
  std::string synth_out;
  syn->add_option("-o,--out", synth_out, "scene directory")->required();
  syn->add_option("--seed", seed, "scene seed");
  syn->add_option("--objects", objects, "number of cuboids");
  syn->add_option("--room", room, "room side in meters");
  syn->add_option("--cameras", cameras, "cameras on the ring");
  syn->add_option("--depth-sigma", noise.depth_sigma, "depth noise (m)");
  syn->add_option("--erosion", noise.mask_erosion_px, "mask erosion radius (px)");
  syn->add_option("--split-prob", noise.split_probability, "mask split probability");
  syn->add_flag("--mesh", with_mesh, "also write the room mesh");
  syn->add_option("--profile", profile, "dataset profile recorded in the manifest");

  CLI11_PARSE(app, argc, argv);
  if (verbose) spdlog::set_level(spdlog::level::debug);
  if (quiet) spdlog::set_level(spdlog::level::err);

  try {
    if (*gen) {
      auto cfg = config_path.empty() ? pbox::PipelineConfig{}
                                     : pbox::PipelineConfig::from_file(config_path);
      for (const auto& o : overrides) cfg.apply_override(o);
      if (deterministic) cfg.deterministic = true;
      if (threads >= 0) cfg.threads = threads;
      cfg.validate();
      pbox::apply_thread_setting(cfg);
      std::vector<fs::path> paths(scenes.begin(), scenes.end());
      const auto results = pbox::run_pipeline(paths, cfg, out_dir);
      size_t total = 0;
      for (const auto& r : results) total += r.boxes.size();
      spdlog::info("wrote {} boxes to {}", total, (fs::path(out_dir) / "boxes.jsonl").string());
    } else if (*ev) {
      const auto ts = parse_thresholds(thresholds);
      std::optional<fs::path> dir;
      if (!report_dir.empty()) dir = report_dir;
      const auto report = pbox::run_eval(pred, gt, ts, dir);
      std::cout << report.to_text();
    } else if (*cls) {
      std::optional<fs::path> out;
      if (!classified.empty()) out = classified;
      const auto text = pbox::run_classify(boxes_path, features_path, bank_path, out, copts);
      if (!out) std::cout << text;
    } else if (*syn) {
      auto scene = pbox::synth::generate_scene(seed, objects, room, cameras);
      scene.noise = noise;
      const pbox::synth::RenderConfig render;
      const auto views = pbox::synth::render_depth_and_masks(scene, render);
      pbox::synth::WriteOptions wo;
      wo.with_mesh = with_mesh;
      wo.profile = pbox::parse_profile(profile);
      const auto manifest = pbox::synth::write_scene_dir(scene, views, synth_out, wo);
      spdlog::info("wrote {} ({} objects, {} views)", manifest.string(), scene.objects.size(),
                   views.size());
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return pbox::exit_code_for(e);
  }
  return 0;
}
