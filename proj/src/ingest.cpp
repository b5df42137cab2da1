#include "pseudobox/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

#include "parallel.hpp"
#include "pseudobox/error.hpp"
#include "pseudobox/io.hpp"

namespace pbox {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetProfile parse_profile(const std::string& name) {
  if (name == "scannet-like" || name == "scannet") return DatasetProfile::ScanNetLike;
  if (name == "arkit-like" || name == "arkit") return DatasetProfile::ArkitLike;
  if (name == "custom") return DatasetProfile::Custom;
  throw ConfigError("unknown dataset profile '" + name + "'");
}

std::string to_string(DatasetProfile profile) {
  switch (profile) {
    case DatasetProfile::ScanNetLike: return "scannet-like";
    case DatasetProfile::ArkitLike: return "arkit-like";
    case DatasetProfile::Custom: return "custom";
  }
  return "custom";
}

fs::path SceneManifest::resolve(const std::string& rel) const {
  const fs::path p(rel);
  return p.is_absolute() ? p : root / p;
}

std::vector<std::uint32_t> SegmentMask2D::segment_ids() const {
  std::vector<std::uint32_t> out(ids.begin(), ids.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (!out.empty() && out.front() == 0) out.erase(out.begin());
  return out;
}

SceneManifest read_manifest(const fs::path& manifest_path) {
  const std::string where = manifest_path.string();
  json j;
  try {
    j = json::parse(io::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw IoError(where, std::string("malformed manifest: ") + e.what());
  }
  SceneManifest m;
  m.root = manifest_path.parent_path();
  try {
    m.scene_id = j.at("scene_id").get<std::string>();
    m.profile = parse_profile(j.value("dataset_profile", std::string("custom")));
    if (j.contains("mesh") && !j["mesh"].is_null()) m.mesh_path = j["mesh"].get<std::string>();
    if (j.contains("embeddings") && !j["embeddings"].is_null()) {
      m.embeddings_path = j["embeddings"].get<std::string>();
    }
    for (const auto& f : j.at("frames")) {
      FrameRecord r;
      r.index = f.at("index").get<int>();
      r.intrinsics.fx = f.at("fx").get<double>();
      r.intrinsics.fy = f.at("fy").get<double>();
      r.intrinsics.cx = f.at("cx").get<double>();
      r.intrinsics.cy = f.at("cy").get<double>();
      r.intrinsics.width = f.at("width").get<int>();
      r.intrinsics.height = f.at("height").get<int>();
      const auto rot = f.at("rotation").get<std::vector<double>>();
      const auto tr = f.at("translation").get<std::vector<double>>();
      if (rot.size() != 9 || tr.size() != 3) {
        throw IoError(where, "frame " + std::to_string(r.index) +
                                 ": rotation needs 9 values and translation 3");
      }
      for (int row = 0; row < 3; ++row) {
        for (int col = 0; col < 3; ++col) r.pose.rotation(row, col) = rot[row * 3 + col];
        r.pose.translation[row] = tr[row];
      }
      r.depth_path = f.at("depth").get<std::string>();
      r.mask_path = f.at("mask").get<std::string>();
      if (f.contains("gray") && !f["gray"].is_null()) r.gray_path = f["gray"].get<std::string>();
      if (f.contains("ignore_ids")) r.ignore_ids = f["ignore_ids"].get<std::vector<std::uint32_t>>();
      m.frames.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw IoError(where, std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(where, e.what());
  }
  if (m.frames.empty()) throw IoError(where, "manifest lists no frames");
  for (size_t i = 0; i < m.frames.size(); ++i) {
    const auto& r = m.frames[i];
    if (i > 0 && r.index <= m.frames[i - 1].index) {
      throw IoError(where, "frame indices must be strictly increasing");
    }
    try {
      r.intrinsics.validate();
      r.pose.validate();
    } catch (const DomainError& e) {
      throw IoError(where, "frame " + std::to_string(r.index) + ": " + e.what());
    }
  }
  return m;
}

void write_manifest(const fs::path& manifest_path, const SceneManifest& m) {
  json j;
  j["scene_id"] = m.scene_id;
  j["dataset_profile"] = to_string(m.profile);
  json frames = json::array();
  for (const auto& r : m.frames) {
    json f;
    f["index"] = r.index;
    f["fx"] = r.intrinsics.fx;
    f["fy"] = r.intrinsics.fy;
    f["cx"] = r.intrinsics.cx;
    f["cy"] = r.intrinsics.cy;
    f["width"] = r.intrinsics.width;
    f["height"] = r.intrinsics.height;
    std::vector<double> rot(9);
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) rot[row * 3 + col] = r.pose.rotation(row, col);
    }
    f["rotation"] = rot;
    f["translation"] = {r.pose.translation.x(), r.pose.translation.y(), r.pose.translation.z()};
    f["depth"] = r.depth_path;
    f["mask"] = r.mask_path;
    if (r.gray_path) f["gray"] = *r.gray_path;
    if (!r.ignore_ids.empty()) f["ignore_ids"] = r.ignore_ids;
    frames.push_back(std::move(f));
  }
  j["frames"] = std::move(frames);
  if (m.mesh_path) j["mesh"] = *m.mesh_path;
  if (m.embeddings_path) j["embeddings"] = *m.embeddings_path;
  io::write_text_atomic(manifest_path, j.dump(2) + "\n");
}

namespace {

void check_dims(const fs::path& path, const io::PgmImage& img, const CameraIntrinsics& intr) {
  if (img.width != intr.width || img.height != intr.height) {
    throw IoError(path.string(), "dimension mismatch: raster " + std::to_string(img.width) + "x" +
                                     std::to_string(img.height) + ", declared " +
                                     std::to_string(intr.width) + "x" +
                                     std::to_string(intr.height));
  }
}

LoadedFrame load_frame(const SceneManifest& m, const FrameRecord& r) {
  LoadedFrame f;
  f.record = r;
  const auto depth_path = m.resolve(r.depth_path);
  const auto depth_img = io::read_pgm(depth_path);
  check_dims(depth_path, depth_img, r.intrinsics);
  f.depth = DepthMap(depth_img.width, depth_img.height);
  for (size_t i = 0; i < depth_img.samples.size(); ++i) {
    f.depth.values[i] = depth_img.samples[i] / 1000.0;
  }

  const auto mask_path = m.resolve(r.mask_path);
  const auto mask_img = io::read_pgm(mask_path);
  check_dims(mask_path, mask_img, r.intrinsics);
  f.mask = SegmentMask2D(mask_img.width, mask_img.height, r.index);
  std::copy(mask_img.samples.begin(), mask_img.samples.end(), f.mask.ids.begin());

  if (r.gray_path) {
    const auto gray_path = m.resolve(*r.gray_path);
    const auto gray_img = io::read_pgm(gray_path);
    check_dims(gray_path, gray_img, r.intrinsics);
    if (gray_img.maxval > 255) throw IoError(gray_path.string(), "gray image must be 8-bit");
    GrayImage g{gray_img.width, gray_img.height, {}};
    g.pixels.assign(gray_img.samples.begin(), gray_img.samples.end());
    f.gray = std::move(g);
  }
  return f;
}

}  // namespace

EmbeddingTable load_embedding_table(const fs::path& segments,
                                    const std::optional<fs::path>& prompt_bank) {
  EmbeddingTable table;
  const auto seg_file = io::read_emb1(segments);
  table.dim = static_cast<int>(seg_file.dim);
  for (const auto& rec : seg_file.records) {
    Eigen::VectorXd v(rec.values.size());
    for (size_t i = 0; i < rec.values.size(); ++i) v[static_cast<Eigen::Index>(i)] = rec.values[i];
    table.segments[{rec.frame, rec.segment}] = std::move(v);
  }
  if (prompt_bank) {
    const auto bank = io::read_emb1(*prompt_bank);
    if (!seg_file.records.empty() && bank.dim != seg_file.dim) {
      throw IoError(prompt_bank->string(), "prompt bank dimension differs from segment features");
    }
    if (seg_file.records.empty()) table.dim = static_cast<int>(bank.dim);
    fs::path names_path = *prompt_bank;
    names_path += ".json";
    std::vector<std::string> names;
    try {
      names = json::parse(io::read_text(names_path)).get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw IoError(names_path.string(), std::string("malformed class list: ") + e.what());
    }
    table.class_names = names;
    table.class_embeddings.assign(names.size(), Eigen::VectorXd());
    std::vector<bool> seen(names.size(), false);
    for (const auto& rec : bank.records) {
      if (rec.frame != io::kPromptFrame || rec.segment >= names.size()) {
        throw IoError(prompt_bank->string(), "prompt record does not match the class list");
      }
      Eigen::VectorXd v(rec.values.size());
      for (size_t i = 0; i < rec.values.size(); ++i) v[static_cast<Eigen::Index>(i)] = rec.values[i];
      table.class_embeddings[rec.segment] = std::move(v);
      seen[rec.segment] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw IoError(prompt_bank->string(), "some classes have no prompt embedding");
    }
  }
  return table;
}

Scene load_scene(const fs::path& manifest_path) {
  Scene scene;
  scene.manifest = read_manifest(manifest_path);
  const auto& m = scene.manifest;
  const long n = static_cast<long>(m.frames.size());
  scene.frames.resize(m.frames.size());
  detail::FirstError err;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      scene.frames[i] = load_frame(m, m.frames[i]);
    } catch (...) {
      err.capture(i);
    }
  }
  err.rethrow();
  if (m.mesh_path) {
    auto mesh = io::read_ply(m.resolve(*m.mesh_path));
    try {
      mesh.validate();
    } catch (const DomainError& e) {
      throw IoError(m.resolve(*m.mesh_path).string(), e.what());
    }
    scene.mesh = std::move(mesh);
  }
  if (m.embeddings_path) scene.embeddings = load_embedding_table(m.resolve(*m.embeddings_path));
  return scene;
}

double sharpness_score(const GrayImage& image) {
  if (image.width < 3 || image.height < 3) {
    throw DomainError("sharpness needs an image of at least 3x3 pixels");
  }
  // Welford accumulation over the interior responses.
  double mean = 0.0;
  double m2 = 0.0;
  long count = 0;
  for (int v = 1; v < image.height - 1; ++v) {
    for (int u = 1; u < image.width - 1; ++u) {
      const double lap = 4.0 * image.at(u, v) - image.at(u - 1, v) - image.at(u + 1, v) -
                         image.at(u, v - 1) - image.at(u, v + 1);
      ++count;
      const double delta = lap - mean;
      mean += delta / count;
      m2 += delta * (lap - mean);
    }
  }
  return m2 / count;
}

std::vector<size_t> select_frames(std::span<const double> sharpness, size_t target) {
  if (target == 0) throw DomainError("frame selection target must be at least 1");
  std::vector<size_t> remaining(sharpness.size());
  for (size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
  std::vector<size_t> chosen;
  while (chosen.size() < target && !remaining.empty()) {
    const size_t runs = std::min(target - chosen.size(), remaining.size());
    const size_t m = remaining.size();
    std::vector<bool> taken(m, false);
    for (size_t r = 0; r < runs; ++r) {
      const size_t lo = r * m / runs;
      const size_t hi = (r + 1) * m / runs;
      size_t best = lo;
      for (size_t i = lo + 1; i < hi; ++i) {
        if (sharpness[remaining[i]] > sharpness[remaining[best]]) best = i;
      }
      chosen.push_back(remaining[best]);
      taken[best] = true;
    }
    std::vector<size_t> next;
    next.reserve(m - runs);
    for (size_t i = 0; i < m; ++i) {
      if (!taken[i]) next.push_back(remaining[i]);
    }
    remaining = std::move(next);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

std::vector<size_t> select_frames(const Scene& scene, size_t target) {
  const long n = static_cast<long>(scene.frames.size());
  const bool all_gray = std::all_of(scene.frames.begin(), scene.frames.end(),
                                    [](const LoadedFrame& f) { return f.gray.has_value(); });
  std::vector<double> scores(scene.frames.size(), 0.0);
  if (all_gray) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) scores[i] = sharpness_score(*scene.frames[i].gray);
  }
  return select_frames(scores, target);
}

SegmentMask2D filter_segments_2d(const SegmentMask2D& mask, const DepthMap& depth,
                                 const SegmentFilterConfig& cfg) {
  if (mask.width != depth.width || mask.height != depth.height) {
    throw DomainError("mask and depth dimensions differ");
  }
  struct Stats {
    int min_u = INT32_MAX, min_v = INT32_MAX, max_u = -1, max_v = -1;
    long valid = 0;
  };
  std::map<std::uint32_t, Stats> stats;
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      const auto id = mask.at(u, v);
      if (id == 0) continue;
      auto& s = stats[id];
      s.min_u = std::min(s.min_u, u);
      s.max_u = std::max(s.max_u, u);
      s.min_v = std::min(s.min_v, v);
      s.max_v = std::max(s.max_v, v);
      if (depth.valid(u, v)) ++s.valid;
    }
  }
  std::vector<std::uint32_t> drop;
  for (const auto& [id, s] : stats) {
    const long w = s.max_u - s.min_u + 1;
    const long h = s.max_v - s.min_v + 1;
    const double ratio = static_cast<double>(s.valid) / static_cast<double>(w * h);
    if (std::min(w, h) < cfg.min_box_px || ratio < cfg.min_depth_ratio) drop.push_back(id);
  }
  SegmentMask2D out = mask;
  clear_ids(out, drop);
  return out;
}

void clear_ids(SegmentMask2D& mask, std::span<const std::uint32_t> ids) {
  if (ids.empty()) return;
  const std::set<std::uint32_t> lookup(ids.begin(), ids.end());
  for (auto& id : mask.ids) {
    if (id != 0 && lookup.count(id)) id = 0;
  }
}

}  // namespace pbox
