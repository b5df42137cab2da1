#pragma once

#include <span>
#include <string>
#include <vector>

#include "pseudobox/boxes.hpp"

namespace pbox {

// Intersection volume over union volume; 0 when the union is empty.
double iou_aabb(const AxisAlignedBox3D& a, const AxisAlignedBox3D& b);

struct MatchPair {
  size_t pred = 0;
  size_t gt = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<size_t> unmatched_preds;
  std::vector<size_t> unmatched_gts;
};

// Row-major preds x gts IoU matrix, parallel over predictions.
std::vector<double> iou_matrix(std::span<const AxisAlignedBox3D> preds,
                               std::span<const AxisAlignedBox3D> gts);

// Greedy one-to-one matching in descending IoU order (ties: lower pred, then lower gt index),
// accepting pairs while IoU >= tau.
MatchResult match_boxes(std::span<const AxisAlignedBox3D> preds,
                        std::span<const AxisAlignedBox3D> gts, double tau);

// Same rule over a precomputed preds x gts matrix.
MatchResult match_from_matrix(std::span<const double> iou, size_t n_preds, size_t n_gts,
                              double tau);

struct ThresholdStats {
  double threshold = 0.0;
  size_t tp = 0;
  size_t fp = 0;
  size_t fn = 0;
  // TP/(TP+FP), 0 without predictions.
  double precision() const;
  // TP/(TP+FN), 1 without ground truths.
  double recall() const;
};

struct SceneEval {
  std::string scene_id;
  size_t n_preds = 0;
  size_t n_gts = 0;
  std::vector<ThresholdStats> stats;  // one per threshold
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<ThresholdStats> pooled;
  std::vector<SceneEval> per_scene;
  size_t scene_count() const { return per_scene.size(); }

  const ThresholdStats& at(double threshold) const;
  std::string to_json() const;
  std::string to_text() const;
};

SceneEval evaluate_scene(const std::string& scene_id, std::span<const AxisAlignedBox3D> preds,
                         std::span<const AxisAlignedBox3D> gts, std::span<const double> thresholds);

// Pools (micro-averages) per-scene counts.
EvalReport precision_recall(std::span<const SceneEval> scenes, std::span<const double> thresholds);

// Groups records by scene id (union of both sides) and evaluates every scene.
EvalReport evaluate(std::span<const BoxRecord> preds, std::span<const BoxRecord> gts,
                    std::span<const double> thresholds);

}  // namespace pbox
