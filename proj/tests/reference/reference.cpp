#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include "pseudobox/eval.hpp"

namespace pbox::reference {

namespace {

using Cell = std::tuple<long long, long long, long long>;

Cell cell_of(const Point3& p, const VoxelGridSpec& g) {
  return {static_cast<long long>(std::floor((p.x() - g.origin.x()) / g.cell)),
          static_cast<long long>(std::floor((p.y() - g.origin.y()) / g.cell)),
          static_cast<long long>(std::floor((p.z() - g.origin.z()) / g.cell))};
}

}  // namespace

double overlap_by_sets(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  const std::set<std::uint32_t> sa(a.begin(), a.end());
  size_t common = 0;
  for (auto x : std::set<std::uint32_t>(b.begin(), b.end())) common += sa.count(x);
  return static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
}

std::vector<NodePair> exhaustive_edges(std::span<const PartialSegment3D> nodes,
                                       const CanonicalCloud& canon, const VoxelGridSpec& grid,
                                       double theta) {
  std::vector<std::set<Cell>> cells(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    for (auto v : nodes[i].points) cells[i].insert(cell_of(canon[v], grid));
  }
  std::vector<NodePair> out;
  for (size_t a = 0; a < nodes.size(); ++a) {
    for (size_t b = a + 1; b < nodes.size(); ++b) {
      bool shared = false;
      for (const auto& c : cells[a]) {
        if (cells[b].count(c)) {
          shared = true;
          break;
        }
      }
      if (shared && overlap_by_sets(nodes[a].points, nodes[b].points) > theta) {
        out.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
      }
    }
  }
  return out;
}

std::optional<std::uint32_t> nearest_brute(std::span<const Point3> vertices, const Point3& p,
                                           double radius) {
  std::optional<std::uint32_t> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < vertices.size(); ++i) {
    const double d = (vertices[i] - p).norm();
    if (d <= radius && d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(i);
    }
  }
  return best;
}

std::vector<std::uint32_t> standardize_brute(std::span<const Point3> points,
                                             std::span<const Point3> vertices, double radius) {
  std::set<std::uint32_t> out;
  for (const auto& p : points) {
    if (auto v = nearest_brute(vertices, p, radius)) out.insert(*v);
  }
  return {out.begin(), out.end()};
}

double monte_carlo_iou(const AxisAlignedBox3D& a, const AxisAlignedBox3D& b, size_t samples,
                       std::uint64_t seed) {
  const Point3 lo = a.min_corner().cwiseMin(b.min_corner());
  const Point3 hi = a.max_corner().cwiseMax(b.max_corner());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto inside = [](const AxisAlignedBox3D& box, const Point3& p) {
    const Point3 l = box.min_corner(), h = box.max_corner();
    return (p.array() >= l.array()).all() && (p.array() <= h.array()).all();
  };
  size_t in_a = 0, in_b = 0, both = 0;
  for (size_t i = 0; i < samples; ++i) {
    const Point3 p(lo.x() + u(rng) * (hi.x() - lo.x()), lo.y() + u(rng) * (hi.y() - lo.y()),
                   lo.z() + u(rng) * (hi.z() - lo.z()));
    const bool ia = inside(a, p), ib = inside(b, p);
    in_a += ia;
    in_b += ib;
    both += ia && ib;
  }
  const size_t uni = in_a + in_b - both;
  return uni == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(uni);
}

std::vector<std::uint32_t> component_labels(std::span<const Point3> points, double radius) {
  std::vector<std::uint32_t> parent(points.size());
  for (size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<std::uint32_t>(i);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (size_t i = 0; i < points.size(); ++i) {
    for (size_t j = i + 1; j < points.size(); ++j) {
      if ((points[i] - points[j]).norm() <= radius) {
        const auto a = find(static_cast<std::uint32_t>(i));
        const auto b = find(static_cast<std::uint32_t>(j));
        parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<std::uint32_t> out(points.size());
  for (size_t i = 0; i < points.size(); ++i) out[i] = find(static_cast<std::uint32_t>(i));
  return out;
}

std::vector<std::uint32_t> graph_component_labels(const SegmentGraph& graph) {
  const auto none = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> label(graph.node_count(), none);
  for (std::uint32_t s = 0; s < graph.node_count(); ++s) {
    if (label[s] != none) continue;
    std::queue<std::uint32_t> q;
    q.push(s);
    label[s] = s;
    while (!q.empty()) {
      const auto x = q.front();
      q.pop();
      for (auto y : graph.adjacency[x]) {
        if (label[y] == none) {
          label[y] = s;
          q.push(y);
        }
      }
    }
  }
  return label;
}

synth::RayHit cast_pixel_faces(const synth::SyntheticScene& scene,
                               const synth::SyntheticCamera& cam, int u, int v,
                               const synth::RenderConfig& cfg) {
  const auto& k = cam.intrinsics;
  const Eigen::Vector3d d = cam.pose.rotation.transpose() *
                            Eigen::Vector3d((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  const Point3 o = cam.pose.center();
  synth::RayHit best;
  double best_t = std::numeric_limits<double>::infinity();
  // axis-aligned rectangle at coordinate `c` on `axis`, bounded by lo/hi on the other two axes
  auto face = [&](int axis, double c, const Point3& lo, const Point3& hi, std::uint32_t id,
                  double normal_sign) {
    if (d[axis] == 0.0) return;
    const double t = (c - o[axis]) / d[axis];
    if (!(t > 0.0) || t >= best_t) return;
    const Point3 p = o + t * d;
    const double eps = 1e-12;
    for (int a = 0; a < 3; ++a) {
      if (a == axis) continue;
      if (p[a] < lo[a] - eps || p[a] > hi[a] + eps) return;
    }
    best_t = t;
    best.id = id;
    best.normal = Eigen::Vector3d::Zero();
    best.normal[axis] = normal_sign;
  };
  const Point3 room_lo = Point3::Zero();
  const Point3 room_hi = scene.room;
  for (int a = 0; a < 3; ++a) {
    face(a, 0.0, room_lo, room_hi, 0, 1.0);
    face(a, scene.room[a], room_lo, room_hi, 0, -1.0);
  }
  for (const auto& obj : scene.objects) {
    const Point3 lo = obj.min_corner(), hi = obj.max_corner();
    const auto id = static_cast<std::uint32_t>(obj.segment_id);
    for (int a = 0; a < 3; ++a) {
      // only faces whose outward normal opposes the ray are visible from outside
      if (d[a] > 0.0) face(a, lo[a], lo, hi, id, -1.0);
      if (d[a] < 0.0) face(a, hi[a], lo, hi, id, 1.0);
    }
  }
  if (!std::isfinite(best_t) || best_t < cfg.near_clip || best_t > cfg.far_clip) return {};
  best.depth = best_t;
  return best;
}

std::pair<DepthMap, SegmentMask2D> render_serial(const synth::SyntheticScene& scene, size_t camera,
                                                 const synth::RenderConfig& cfg) {
  const auto& cam = scene.cameras[camera];
  DepthMap depth(cam.intrinsics.width, cam.intrinsics.height);
  SegmentMask2D mask(cam.intrinsics.width, cam.intrinsics.height, static_cast<int>(camera));
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const auto hit = cast_pixel_faces(scene, cam, u, v, cfg);
      depth.at(u, v) = hit.depth;
      mask.at(u, v) = hit.id;
    }
  }
  return {std::move(depth), std::move(mask)};
}

std::vector<std::uint32_t> assign_nearest(const EmbeddingMatrix& x, const EmbeddingMatrix& c) {
  std::vector<std::uint32_t> out(x.rows());
  for (size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < c.rows(); ++j) {
      double d = 0.0;
      for (size_t k = 0; k < x.cols(); ++k) d += (x(i, k) - c(j, k)) * (x(i, k) - c(j, k));
      if (d < best) {
        best = d;
        out[i] = static_cast<std::uint32_t>(j);
      }
    }
  }
  return out;
}

double inertia(const EmbeddingMatrix& x, std::span<const std::uint32_t> labels,
               const EmbeddingMatrix& c) {
  double total = 0.0;
  for (size_t i = 0; i < x.rows(); ++i) {
    for (size_t k = 0; k < x.cols(); ++k) {
      const double diff = x(i, k) - c(labels[i], k);
      total += diff * diff;
    }
  }
  return total;
}

std::vector<std::pair<size_t, size_t>> greedy_match(std::span<const AxisAlignedBox3D> preds,
                                                    std::span<const AxisAlignedBox3D> gts,
                                                    double tau) {
  std::vector<bool> pu(preds.size()), gu(gts.size());
  std::vector<std::pair<size_t, size_t>> out;
  while (true) {
    double best = -1.0;
    size_t bp = 0, bg = 0;
    for (size_t p = 0; p < preds.size(); ++p) {
      if (pu[p]) continue;
      for (size_t g = 0; g < gts.size(); ++g) {
        if (gu[g]) continue;
        const double iou = iou_aabb(preds[p], gts[g]);
        if (iou > best) {
          best = iou;
          bp = p;
          bg = g;
        }
      }
    }
    if (best < tau) break;
    pu[bp] = gu[bg] = true;
    out.emplace_back(bp, bg);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double laplacian_variance(const GrayImage& image) {
  std::vector<double> values;
  for (int v = 1; v + 1 < image.height; ++v) {
    for (int u = 1; u + 1 < image.width; ++u) {
      values.push_back(4.0 * image.at(u, v) - image.at(u - 1, v) - image.at(u + 1, v) -
                       image.at(u, v - 1) - image.at(u, v + 1));
    }
  }
  double mean = 0.0;
  for (double x : values) mean += x;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double x : values) var += (x - mean) * (x - mean);
  return var / static_cast<double>(values.size());
}

std::vector<double> iou_matrix_serial(std::span<const AxisAlignedBox3D> preds,
                                      std::span<const AxisAlignedBox3D> gts) {
  std::vector<double> out;
  out.reserve(preds.size() * gts.size());
  for (const auto& p : preds) {
    for (const auto& g : gts) out.push_back(iou_aabb(p, g));
  }
  return out;
}

NodeScene random_node_scene(std::uint64_t seed, size_t count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<Point3> verts(4000);
  for (auto& v : verts) v = Point3(u(rng), u(rng), u(rng));
  NodeScene s{CanonicalCloud(verts), {}};
  std::vector<Point3> anchors(std::max<size_t>(1, count / 4));
  for (auto& a : anchors) a = Point3(u(rng), u(rng), u(rng));
  std::uniform_real_distribution<double> radius(0.15, 0.5), jitter(-0.2, 0.2), keep(0.0, 1.0);
  while (s.nodes.size() < count) {
    const auto& a = anchors[rng() % anchors.size()];
    const Point3 c = a + Point3(jitter(rng), jitter(rng), jitter(rng));
    const double r = radius(rng);
    const double p_keep = 0.3 + 0.7 * keep(rng);
    PartialSegment3D node;
    for (size_t i = 0; i < verts.size(); ++i) {
      if ((verts[i] - c).norm() <= r && keep(rng) < p_keep) node.points.push_back(static_cast<std::uint32_t>(i));
    }
    if (node.points.empty()) continue;
    node.node_id = static_cast<std::uint32_t>(s.nodes.size());
    node.frame_index = static_cast<int>(s.nodes.size());
    node.segment_id = 1;
    s.nodes.push_back(std::move(node));
  }
  return s;
}

SegmentGraph two_cliques(size_t size) {
  std::vector<NodePair> edges;
  for (size_t base : {size_t{0}, size}) {
    for (size_t a = 0; a < size; ++a)
      for (size_t b = a + 1; b < size; ++b)
        edges.emplace_back(static_cast<std::uint32_t>(base + a), static_cast<std::uint32_t>(base + b));
  }
  return SegmentGraph::from_edges(2 * size, edges);
}

double purity(std::span<const std::uint32_t> labels, std::span<const std::uint32_t> truth) {
  std::map<std::uint32_t, std::map<std::uint32_t, size_t>> votes;
  for (size_t i = 0; i < labels.size(); ++i) ++votes[labels[i]][truth[i]];
  size_t good = 0;
  for (const auto& [cluster, counts] : votes) {
    size_t best = 0;
    for (const auto& [t, n] : counts) best = std::max(best, n);
    good += best;
  }
  return static_cast<double>(good) / static_cast<double>(labels.size());
}

}  // namespace pbox::reference
