#include "pseudobox/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "json.hpp"
#include "pseudobox/error.hpp"

namespace pbox {

double iou_aabb(const AxisAlignedBox3D& a, const AxisAlignedBox3D& b) {
  const Point3 lo = a.min_corner().cwiseMax(b.min_corner());
  const Point3 hi = a.max_corner().cwiseMin(b.max_corner());
  const Eigen::Vector3d ext = (hi - lo).cwiseMax(0.0);
  const double inter = ext.x() * ext.y() * ext.z();
  const double uni = a.volume() + b.volume() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<double> iou_matrix(std::span<const AxisAlignedBox3D> preds,
                               std::span<const AxisAlignedBox3D> gts) {
  std::vector<double> m(preds.size() * gts.size());
  const long np = static_cast<long>(preds.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < np; ++i) {
    for (size_t j = 0; j < gts.size(); ++j) m[i * gts.size() + j] = iou_aabb(preds[i], gts[j]);
  }
  return m;
}

MatchResult match_from_matrix(std::span<const double> iou, size_t n_preds, size_t n_gts,
                              double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("IoU threshold must lie in (0, 1]");
  if (iou.size() != n_preds * n_gts) throw DomainError("IoU matrix has the wrong size");
  std::vector<MatchPair> cand;
  for (size_t i = 0; i < n_preds; ++i) {
    for (size_t j = 0; j < n_gts; ++j) {
      const double v = iou[i * n_gts + j];
      if (v >= tau) cand.push_back({i, j, v});
    }
  }
  std::sort(cand.begin(), cand.end(), [](const MatchPair& x, const MatchPair& y) {
    if (x.iou != y.iou) return x.iou > y.iou;
    if (x.pred != y.pred) return x.pred < y.pred;
    return x.gt < y.gt;
  });
  std::vector<bool> pred_used(n_preds, false), gt_used(n_gts, false);
  MatchResult r;
  for (const auto& c : cand) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = true;
    r.pairs.push_back(c);
  }
  for (size_t i = 0; i < n_preds; ++i) {
    if (!pred_used[i]) r.unmatched_preds.push_back(i);
  }
  for (size_t j = 0; j < n_gts; ++j) {
    if (!gt_used[j]) r.unmatched_gts.push_back(j);
  }
  return r;
}

MatchResult match_boxes(std::span<const AxisAlignedBox3D> preds,
                        std::span<const AxisAlignedBox3D> gts, double tau) {
  return match_from_matrix(iou_matrix(preds, gts), preds.size(), gts.size(), tau);
}

double ThresholdStats::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ThresholdStats::recall() const {
  return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

SceneEval evaluate_scene(const std::string& scene_id, std::span<const AxisAlignedBox3D> preds,
                         std::span<const AxisAlignedBox3D> gts, std::span<const double> thresholds) {
  SceneEval s;
  s.scene_id = scene_id;
  s.n_preds = preds.size();
  s.n_gts = gts.size();
  const auto m = iou_matrix(preds, gts);
  for (double t : thresholds) {
    const auto r = match_from_matrix(m, preds.size(), gts.size(), t);
    s.stats.push_back({t, r.pairs.size(), r.unmatched_preds.size(), r.unmatched_gts.size()});
  }
  return s;
}

EvalReport precision_recall(std::span<const SceneEval> scenes, std::span<const double> thresholds) {
  if (thresholds.empty()) throw ConfigError("evaluation needs at least one threshold");
  EvalReport report;
  report.thresholds.assign(thresholds.begin(), thresholds.end());
  for (double t : thresholds) report.pooled.push_back({t, 0, 0, 0});
  for (const auto& s : scenes) {
    if (s.stats.size() != thresholds.size()) throw DomainError("scene evaluated at other thresholds");
    for (size_t k = 0; k < thresholds.size(); ++k) {
      report.pooled[k].tp += s.stats[k].tp;
      report.pooled[k].fp += s.stats[k].fp;
      report.pooled[k].fn += s.stats[k].fn;
    }
    report.per_scene.push_back(s);
  }
  return report;
}

EvalReport evaluate(std::span<const BoxRecord> preds, std::span<const BoxRecord> gts,
                    std::span<const double> thresholds) {
  std::map<std::string, std::pair<std::vector<AxisAlignedBox3D>, std::vector<AxisAlignedBox3D>>>
      scenes;
  for (const auto& r : preds) scenes[r.scene_id].first.push_back(r.box);
  for (const auto& r : gts) scenes[r.scene_id].second.push_back(r.box);
  std::vector<std::string> ids;
  for (const auto& [id, _] : scenes) ids.push_back(id);
  std::vector<SceneEval> evals(ids.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < static_cast<long>(ids.size()); ++i) {
    const auto& [p, g] = scenes.at(ids[i]);
    evals[i] = evaluate_scene(ids[i], p, g, thresholds);
  }
  return precision_recall(evals, thresholds);
}

const ThresholdStats& EvalReport::at(double threshold) const {
  for (const auto& s : pooled) {
    if (std::abs(s.threshold - threshold) < 1e-12) return s;
  }
  throw DomainError("threshold not part of the report");
}

namespace {

nlohmann::json stats_json(const ThresholdStats& s) {
  return {{"threshold", s.threshold}, {"precision", s.precision()}, {"recall", s.recall()},
          {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn}};
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["thresholds"] = thresholds;
  j["scene_count"] = scene_count();
  j["pooled"] = nlohmann::json::array();
  for (const auto& s : pooled) j["pooled"].push_back(stats_json(s));
  j["per_scene"] = nlohmann::json::array();
  for (const auto& sc : per_scene) {
    nlohmann::json e{{"scene_id", sc.scene_id}, {"n_preds", sc.n_preds}, {"n_gts", sc.n_gts}};
    e["stats"] = nlohmann::json::array();
    for (const auto& s : sc.stats) e["stats"].push_back(stats_json(s));
    j["per_scene"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

std::string EvalReport::to_text() const {
  std::string out;
  char buf[160];
  std::string header = "Method";
  for (double t : thresholds) {
    std::snprintf(buf, sizeof buf, " | Precision@%.0f | Recall@%.0f", t * 100, t * 100);
    header += buf;
  }
  out += header + "\n" + std::string(header.size(), '-') + "\n";
  std::string row = "pooled";
  row.resize(6, ' ');
  for (const auto& s : pooled) {
    std::snprintf(buf, sizeof buf, " | %12.2f | %9.2f", 100.0 * s.precision(), 100.0 * s.recall());
    row += buf;
  }
  out += row + "\n\n";
  out += "scene            preds   gts";
  for (double t : thresholds) {
    std::snprintf(buf, sizeof buf, "   P@%.2f   R@%.2f", t, t);
    out += buf;
  }
  out += "\n";
  for (const auto& sc : per_scene) {
    std::snprintf(buf, sizeof buf, "%-16s %5zu %5zu", sc.scene_id.c_str(), sc.n_preds, sc.n_gts);
    out += buf;
    for (const auto& s : sc.stats) {
      std::snprintf(buf, sizeof buf, "   %6.4f   %6.4f", s.precision(), s.recall());
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace pbox
