#include "pseudobox/config.hpp"

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <sstream>

#include "pseudobox/error.hpp"
#include "pseudobox/io.hpp"

namespace pbox {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

size_t to_count(const std::string& key, const std::string& v) {
  const auto n = to_int(key, v);
  if (n < 0) throw ConfigError(key + " must be non-negative");
  return static_cast<size_t>(n);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, std::string v) {
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) throw ConfigError(key + ": expected at least one value");
  return out;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

std::string fmt_double(double d) {
  std::ostringstream os;
  os.precision(17);
  os << d;
  return os.str();
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = unquote(trim(raw));
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> table = {
      {"ingest.target_frames", [&](auto& s) { target_frames = to_count(key, s); }},
      {"ingest.min_box_px", [&](auto& s) { filter.min_box_px = static_cast<int>(to_int(key, s)); }},
      {"ingest.min_depth_ratio", [&](auto& s) { filter.min_depth_ratio = to_double(key, s); }},
      {"lift.canonical",
       [&](auto& s) {
         if (s == "auto") canonical = CanonicalChoice::Auto;
         else if (s == "voxel") canonical = CanonicalChoice::Voxel;
         else if (s == "mesh") canonical = CanonicalChoice::Mesh;
         else throw ConfigError(key + ": expected auto, voxel or mesh");
       }},
      {"lift.cell", [&](auto& s) { voxel_cell = to_double(key, s); }},
      {"lift.snap_radius", [&](auto& s) { snap_radius = to_double(key, s); }},
      {"graph.theta", [&](auto& s) { theta = to_double(key, s); }},
      {"graph.cell", [&](auto& s) { graph_cell = to_double(key, s); }},
      {"walk.walks_per_node", [&](auto& s) { walk.walks_per_node = static_cast<int>(to_int(key, s)); }},
      {"walk.length", [&](auto& s) { walk.walk_length = static_cast<int>(to_int(key, s)); }},
      {"walk.window", [&](auto& s) { walk.window = static_cast<int>(to_int(key, s)); }},
      {"walk.dim", [&](auto& s) { walk.dimension = static_cast<int>(to_int(key, s)); }},
      {"walk.negatives", [&](auto& s) { walk.negatives = static_cast<int>(to_int(key, s)); }},
      {"walk.epochs", [&](auto& s) { walk.epochs = static_cast<int>(to_int(key, s)); }},
      {"walk.lr", [&](auto& s) { walk.learning_rate = to_double(key, s); }},
      {"walk.lr_min", [&](auto& s) { walk.min_learning_rate = to_double(key, s); }},
      {"cluster.k", [&](auto& s) { k = to_count(key, s); }},
      {"cluster.k_mode",
       [&](auto& s) {
         if (s == "fixed") k_mode = KMode::Fixed;
         else if (s == "components") k_mode = KMode::Components;
         else throw ConfigError(key + ": expected fixed or components");
       }},
      {"cluster.max_iters", [&](auto& s) { max_iters = to_count(key, s); }},
      {"cluster.restarts", [&](auto& s) { restarts = to_count(key, s); }},
      {"cluster.link_radius", [&](auto& s) { link_radius = to_double(key, s); }},
      {"msr.enabled", [&](auto& s) { msr_enabled = to_bool(key, s); }},
      {"msr.k", [&](auto& s) { msr_k = to_double(key, s); }},
      {"msr.min_size", [&](auto& s) { msr_min_size = static_cast<std::uint32_t>(to_count(key, s)); }},
      {"msr.min_overlap", [&](auto& s) { msr_min_overlap = to_double(key, s); }},
      {"boxes.profile",
       [&](auto& s) {
         if (s != "auto") parse_profile(s);
         profile = s;
       }},
      {"boxes.min_points", [&](auto& s) { custom_min_points = to_int(key, s); }},
      {"boxes.max_volume", [&](auto& s) { max_volume = to_double(key, s); }},
      {"boxes.center", [&](auto& s) { center = parse_center_mode(s); }},
      {"eval.thresholds", [&](auto& s) { thresholds = to_list(key, s); }},
      {"run.seed", [&](auto& s) { seed = static_cast<std::uint64_t>(to_int(key, s)); }},
      {"run.threads", [&](auto& s) { threads = static_cast<int>(to_int(key, s)); }},
      {"run.deterministic", [&](auto& s) { deterministic = to_bool(key, s); }},
      {"dump.nodes", [&](auto& s) { dump_nodes = to_bool(key, s); }},
      {"dump.graph", [&](auto& s) { dump_graph = to_bool(key, s); }},
      {"dump.segments", [&](auto& s) { dump_segments = to_bool(key, s); }},
      {"dump.embeddings", [&](auto& s) { dump_embeddings = to_bool(key, s); }},
  };
  // bare run keys are accepted at top level too
  auto it = table.find(key);
  if (it == table.end() && key.find('.') == std::string::npos) it = table.find("run." + key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(v);
}

void PipelineConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void PipelineConfig::validate() const {
  require(target_frames >= 1, "ingest.target_frames must be at least 1");
  require(filter.min_box_px >= 0, "ingest.min_box_px must be non-negative");
  require(filter.min_depth_ratio >= 0.0 && filter.min_depth_ratio <= 1.0,
          "ingest.min_depth_ratio must lie in [0, 1]");
  require(voxel_cell > 0.0, "lift.cell must be positive");
  require(snap_radius > 0.0, "lift.snap_radius must be positive");
  require(theta > 0.0 && theta < 1.0, "graph.theta must lie in (0, 1)");
  require(graph_cell > 0.0, "graph.cell must be positive");
  walk_config().validate();
  require(k >= 1, "cluster.k must be at least 1");
  require(max_iters >= 1, "cluster.max_iters must be at least 1");
  require(restarts >= 1, "cluster.restarts must be at least 1");
  require(link_radius > 0.0, "cluster.link_radius must be positive");
  require(msr_k > 0.0, "msr.k must be positive");
  require(msr_min_overlap >= 0.0 && msr_min_overlap < 1.0, "msr.min_overlap must lie in [0, 1)");
  require(!(msr_enabled && canonical == CanonicalChoice::Voxel),
          "msr.enabled needs the mesh canonical cloud (lift.canonical = mesh or auto)");
  require(custom_min_points >= 1, "boxes.min_points must be at least 1");
  require(max_volume > 0.0, "boxes.max_volume must be positive");
  for (double t : thresholds) require(t > 0.0 && t <= 1.0, "eval.thresholds must lie in (0, 1]");
  require(threads >= 0, "run.threads must be non-negative");
}

CanonicalMode PipelineConfig::canonical_mode() const {
  switch (canonical) {
    case CanonicalChoice::Voxel: return CanonicalMode::VoxelCentroids;
    case CanonicalChoice::Mesh: return CanonicalMode::MeshVertices;
    case CanonicalChoice::Auto: break;
  }
  return msr_enabled ? CanonicalMode::MeshVertices : CanonicalMode::VoxelCentroids;
}

BoxFilterConfig PipelineConfig::box_filter(DatasetProfile manifest_profile) const {
  const auto p = profile == "auto" ? manifest_profile : parse_profile(profile);
  auto f = BoxFilterConfig::for_profile(p, custom_min_points);
  f.max_volume = max_volume;
  return f;
}

WalkConfig PipelineConfig::walk_config() const {
  WalkConfig w = walk;
  w.seed = seed;
  w.deterministic = deterministic;
  return w;
}

std::string PipelineConfig::to_text() const {
  std::ostringstream os;
  auto b = [](bool x) { return x ? "true" : "false"; };
  os << "[ingest]\n"
     << "target_frames = " << target_frames << "\n"
     << "min_box_px = " << filter.min_box_px << "\n"
     << "min_depth_ratio = " << fmt_double(filter.min_depth_ratio) << "\n"
     << "[lift]\n"
     << "canonical = "
     << (canonical == CanonicalChoice::Auto ? "auto"
         : canonical == CanonicalChoice::Voxel ? "voxel" : "mesh") << "\n"
     << "cell = " << fmt_double(voxel_cell) << "\n"
     << "snap_radius = " << fmt_double(snap_radius) << "\n"
     << "[graph]\n"
     << "theta = " << fmt_double(theta) << "\n"
     << "cell = " << fmt_double(graph_cell) << "\n"
     << "[walk]\n"
     << "walks_per_node = " << walk.walks_per_node << "\n"
     << "length = " << walk.walk_length << "\n"
     << "window = " << walk.window << "\n"
     << "dim = " << walk.dimension << "\n"
     << "negatives = " << walk.negatives << "\n"
     << "epochs = " << walk.epochs << "\n"
     << "lr = " << fmt_double(walk.learning_rate) << "\n"
     << "lr_min = " << fmt_double(walk.min_learning_rate) << "\n"
     << "[cluster]\n"
     << "k = " << k << "\n"
     << "k_mode = " << (k_mode == KMode::Fixed ? "fixed" : "components") << "\n"
     << "max_iters = " << max_iters << "\n"
     << "restarts = " << restarts << "\n"
     << "link_radius = " << fmt_double(link_radius) << "\n"
     << "[msr]\n"
     << "enabled = " << b(msr_enabled) << "\n"
     << "k = " << fmt_double(msr_k) << "\n"
     << "min_size = " << msr_min_size << "\n"
     << "min_overlap = " << fmt_double(msr_min_overlap) << "\n"
     << "[boxes]\n"
     << "profile = " << profile << "\n"
     << "min_points = " << custom_min_points << "\n"
     << "max_volume = " << fmt_double(max_volume) << "\n"
     << "center = " << (center == CenterMode::Midpoint ? "midpoint" : "mean") << "\n"
     << "[eval]\n"
     << "thresholds = ";
  for (size_t i = 0; i < thresholds.size(); ++i) os << (i ? "," : "") << fmt_double(thresholds[i]);
  os << "\n[run]\n"
     << "seed = " << seed << "\n"
     << "threads = " << threads << "\n"
     << "deterministic = " << b(deterministic) << "\n"
     << "[dump]\n"
     << "nodes = " << b(dump_nodes) << "\n"
     << "graph = " << b(dump_graph) << "\n"
     << "segments = " << b(dump_segments) << "\n"
     << "embeddings = " << b(dump_embeddings) << "\n";
  return os.str();
}

PipelineConfig PipelineConfig::parse(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string name = trim(std::string_view(line).substr(0, eq));
    try {
      cfg.set(section.empty() ? name : section + "." + name, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
  return parse(io::read_text(path), path.string());
}

int effective_threads(const PipelineConfig& cfg) {
  if (const char* env = std::getenv("PSEUDOBOX_THREADS"); env && *env) {
    const std::string v(env);
    const auto n = to_int("PSEUDOBOX_THREADS", v);
    if (n < 0) throw ConfigError("PSEUDOBOX_THREADS must be non-negative");
    return static_cast<int>(n);
  }
  return cfg.threads;
}

}  // namespace pbox
