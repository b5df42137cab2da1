#include "pseudobox/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "pseudobox/error.hpp"

namespace pbox {

DisjointSets::DisjointSets(size_t n) : parent_(n), size_(n, 1), sets_(n) {
  std::iota(parent_.begin(), parent_.end(), 0u);
}

std::uint32_t DisjointSets::find(std::uint32_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

std::uint32_t DisjointSets::unite(std::uint32_t a, std::uint32_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return a;
  if (size_[a] < size_[b] || (size_[a] == size_[b] && b < a)) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  --sets_;
  return a;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

EmbeddingMatrix seed_plus_plus(const EmbeddingMatrix& x, size_t k, std::mt19937_64& rng) {
  const size_t n = x.rows();
  EmbeddingMatrix c(k, x.cols());
  std::uniform_int_distribution<size_t> first(0, n - 1);
  size_t pick = first(rng);
  std::copy_n(x.row(pick).begin(), x.cols(), c.row(0).begin());
  std::vector<double> d2(n);
  for (size_t i = 0; i < n; ++i) d2[i] = sq_dist(x.row(i), c.row(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (size_t j = 1; j < k; ++j) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    if (total > 0.0) {
      double r = unit(rng) * total;
      pick = n - 1;
      for (size_t i = 0; i < n; ++i) {
        r -= d2[i];
        if (r < 0.0 && d2[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // guard against rounding picking an already-chosen row
      if (d2[pick] == 0.0) {
        pick = static_cast<size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
      }
    } else {
      pick = first(rng);
    }
    std::copy_n(x.row(pick).begin(), x.cols(), c.row(j).begin());
    for (size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x.row(i), c.row(j)));
  }
  return c;
}

// Nearest centroid per row (lowest index on ties). Returns whether any label changed.
bool assign_rows(const EmbeddingMatrix& x, const EmbeddingMatrix& c,
                 std::vector<std::uint32_t>& labels, std::vector<double>& dist) {
  const long n = static_cast<long>(x.rows());
  bool changed = false;
#pragma omp parallel for schedule(static) reduction(|| : changed)
  for (long i = 0; i < n; ++i) {
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < c.rows(); ++j) {
      const double d = sq_dist(x.row(i), c.row(j));
      if (d < best_d) {
        best_d = d;
        best = static_cast<std::uint32_t>(j);
      }
    }
    if (labels[i] != best) changed = true;
    labels[i] = best;
    dist[i] = best_d;
  }
  return changed;
}

}  // namespace

ClusterAssignment kmeans(const EmbeddingMatrix& x, size_t k, std::uint64_t seed, size_t max_iters) {
  const size_t n = x.rows();
  if (n == 0) throw DomainError("k-means on an empty matrix");
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw DomainError("k-means input contains non-finite values");
  }
  if (k > n) {
    spdlog::warn("k-means: k={} exceeds {} rows; clamping", k, n);
    k = n;
  }
  const size_t d = x.cols();
  std::mt19937_64 rng(seed);
  ClusterAssignment out;
  out.k = k;
  out.centroids = seed_plus_plus(x, k, rng);
  out.labels.assign(n, std::numeric_limits<std::uint32_t>::max());
  std::vector<double> dist(n);
  std::vector<size_t> counts(k);

  for (size_t iter = 0; iter < std::max<size_t>(max_iters, 1); ++iter) {
    const bool changed = assign_rows(x, out.centroids, out.labels, dist);
    out.inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
    out.inertia_history.push_back(out.inertia);
    out.iterations = iter + 1;
    if (!changed && iter > 0) break;

    // update step; serial so the sums are order-stable
    EmbeddingMatrix sums(k, d);
    std::fill(counts.begin(), counts.end(), 0);
    for (size_t i = 0; i < n; ++i) {
      auto row = sums.row(out.labels[i]);
      const auto xi = x.row(i);
      for (size_t c = 0; c < d; ++c) row[c] += xi[c];
      ++counts[out.labels[i]];
    }
    std::vector<bool> used(n, false);
    for (size_t j = 0; j < k; ++j) {
      if (counts[j] > 0) {
        for (size_t c = 0; c < d; ++c) out.centroids(j, c) = sums(j, c) / counts[j];
        continue;
      }
      // empty: move onto the row farthest from its own centroid
      size_t far = 0;
      double far_d = -1.0;
      for (size_t i = 0; i < n; ++i) {
        if (!used[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      used[far] = true;
      std::copy_n(x.row(far).begin(), d, out.centroids.row(j).begin());
    }
  }
  return out;
}

ClusterAssignment kmeans_best_of(const EmbeddingMatrix& x, size_t k, std::uint64_t seed,
                                 size_t max_iters, size_t restarts) {
  ClusterAssignment best = kmeans(x, k, seed, max_iters);
  for (size_t r = 1; r < restarts; ++r) {
    auto run = kmeans(x, k, seed + r, max_iters);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

size_t connected_component_count(const SegmentGraph& graph) {
  DisjointSets sets(graph.node_count());
  for (const auto& [a, b] : graph.edges()) sets.unite(a, b);
  return sets.set_count();
}

VertexClusterMap assign_points_majority(std::span<const PartialSegment3D> nodes,
                                        const ClusterAssignment& assignment) {
  // (vertex, cluster) votes, then a run-length count per vertex
  std::vector<std::pair<std::uint32_t, std::uint32_t>> votes;
  size_t total = 0;
  for (const auto& n : nodes) total += n.points.size();
  votes.reserve(total);
  for (const auto& node : nodes) {
    if (node.node_id >= assignment.labels.size()) {
      throw DomainError("node without a cluster assignment");
    }
    const auto cluster = assignment.labels[node.node_id];
    for (auto v : node.points) votes.emplace_back(v, cluster);
  }
  std::sort(votes.begin(), votes.end());
  VertexClusterMap out;
  for (size_t i = 0; i < votes.size();) {
    const auto vertex = votes[i].first;
    std::uint32_t best_cluster = votes[i].second;
    size_t best_count = 0;
    size_t j = i;
    while (j < votes.size() && votes[j].first == vertex) {
      size_t r = j;
      while (r < votes.size() && votes[r] == votes[j]) ++r;
      // clusters arrive ascending, so strict > keeps the smallest index on ties
      if (r - j > best_count) {
        best_count = r - j;
        best_cluster = votes[j].second;
      }
      j = r;
    }
    out.emplace_back(vertex, best_cluster);
    i = j;
  }
  return out;
}

std::vector<CompleteSegment3D> split_connected_components(const VertexClusterMap& labels,
                                                          const CanonicalCloud& canon,
                                                          double link_radius) {
  if (!(link_radius > 0.0)) throw ConfigError("link radius must be positive");
  // group vertices by cluster
  std::vector<std::pair<std::uint32_t, std::uint32_t>> by_cluster;
  by_cluster.reserve(labels.size());
  for (const auto& [v, c] : labels) {
    if (v >= canon.size()) throw DomainError("vertex index outside the canonical cloud");
    by_cluster.emplace_back(c, v);
  }
  std::sort(by_cluster.begin(), by_cluster.end());
  std::vector<std::pair<size_t, size_t>> ranges;
  for (size_t i = 0; i < by_cluster.size();) {
    size_t j = i;
    while (j < by_cluster.size() && by_cluster[j].first == by_cluster[i].first) ++j;
    ranges.emplace_back(i, j);
    i = j;
  }

  const VoxelGridSpec grid(link_radius);
  std::vector<std::vector<CompleteSegment3D>> per_cluster(ranges.size());
#pragma omp parallel for schedule(dynamic)
  for (long r = 0; r < static_cast<long>(ranges.size()); ++r) {
    const auto [lo, hi] = ranges[r];
    const size_t m = hi - lo;
    std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> cells;
    std::vector<VoxelKey> keys(m);
    for (size_t i = 0; i < m; ++i) {
      keys[i] = voxel_key_of(grid, canon[by_cluster[lo + i].second]);
      cells[keys[i]].push_back(static_cast<std::uint32_t>(i));
    }
    DisjointSets sets(m);
    const double r2 = link_radius * link_radius;
    for (size_t i = 0; i < m; ++i) {
      const auto& p = canon[by_cluster[lo + i].second];
      for (int dx = -1; dx <= 1; ++dx) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dz = -1; dz <= 1; ++dz) {
            const auto it = cells.find(keys[i].offset(dx, dy, dz));
            if (it == cells.end()) continue;
            for (auto j : it->second) {
              if (j <= i) continue;
              if ((canon[by_cluster[lo + j].second] - p).squaredNorm() <= r2) {
                sets.unite(static_cast<std::uint32_t>(i), j);
              }
            }
          }
        }
      }
    }
    // vertices are ascending within the cluster, so first-seen order is smallest-vertex order
    std::unordered_map<std::uint32_t, size_t> slot;
    auto& segs = per_cluster[r];
    for (size_t i = 0; i < m; ++i) {
      const auto root = sets.find(static_cast<std::uint32_t>(i));
      auto [it, fresh] = slot.try_emplace(root, segs.size());
      if (fresh) {
        segs.emplace_back();
        segs.back().cluster = by_cluster[lo].first;
      }
      segs[it->second].points.push_back(by_cluster[lo + i].second);
    }
  }
  std::vector<CompleteSegment3D> out;
  for (auto& segs : per_cluster) {
    for (auto& s : segs) {
      s.id = static_cast<std::uint32_t>(out.size());
      out.push_back(std::move(s));
    }
  }
  return out;
}

void attach_contributing_nodes(std::span<CompleteSegment3D> segments,
                               std::span<const PartialSegment3D> nodes,
                               const ClusterAssignment& assignment) {
  std::unordered_map<std::uint32_t, std::uint32_t> owner;  // vertex -> segment slot
  for (std::uint32_t s = 0; s < segments.size(); ++s) {
    for (auto v : segments[s].points) owner[v] = s;
  }
  for (auto& s : segments) s.node_ids.clear();
  for (const auto& node : nodes) {
    const auto cluster = assignment.labels.at(node.node_id);
    std::vector<std::uint32_t> hit;
    for (auto v : node.points) {
      const auto it = owner.find(v);
      if (it != owner.end() && segments[it->second].cluster == cluster) hit.push_back(it->second);
    }
    std::sort(hit.begin(), hit.end());
    hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
    for (auto s : hit) segments[s].node_ids.push_back(node.node_id);
  }
  for (auto& s : segments) std::sort(s.node_ids.begin(), s.node_ids.end());
}

}  // namespace pbox
