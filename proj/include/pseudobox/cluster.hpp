#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pseudobox/graph.hpp"
#include "pseudobox/lift.hpp"

namespace pbox {

class DisjointSets {
 public:
  explicit DisjointSets(size_t n);

  std::uint32_t find(std::uint32_t x);
  // Returns the surviving root.
  std::uint32_t unite(std::uint32_t a, std::uint32_t b);
  std::uint32_t size_of(std::uint32_t x) { return size_[find(x)]; }
  size_t set_count() const { return sets_; }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
  size_t sets_;
};

struct ClusterAssignment {
  std::vector<std::uint32_t> labels;  // per row, in [0, k)
  size_t k = 0;
  double inertia = 0.0;
  // Inertia after every assignment step; non-increasing.
  std::vector<double> inertia_history;
  size_t iterations = 0;
  EmbeddingMatrix centroids;
};

// k-means++ seeding, then Lloyd iterations until the assignment stops changing or max_iters.
// A cluster left empty is reseeded at the point farthest from its current centroid.
// k larger than the row count is clamped (with a warning).
ClusterAssignment kmeans(const EmbeddingMatrix& x, size_t k, std::uint64_t seed,
                         size_t max_iters = 300);

// Best (lowest inertia) of `restarts` runs seeded seed, seed+1, ...
ClusterAssignment kmeans_best_of(const EmbeddingMatrix& x, size_t k, std::uint64_t seed,
                                 size_t max_iters, size_t restarts);

// Number of connected components of the graph, isolated nodes included.
size_t connected_component_count(const SegmentGraph& graph);

// (vertex, cluster) sorted by vertex.
using VertexClusterMap = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

// Each vertex takes the cluster held by most of the nodes containing it; ties go to the
// smaller cluster index.
VertexClusterMap assign_points_majority(std::span<const PartialSegment3D> nodes,
                                        const ClusterAssignment& assignment);

struct CompleteSegment3D {
  std::uint32_t id = 0;
  std::uint32_t cluster = 0;
  std::vector<std::uint32_t> points;    // sorted unique canonical vertex indices
  std::vector<std::uint32_t> node_ids;  // sorted
};

// Splits each cluster into spatially connected components: two vertices are linked when their
// distance is at most link_radius. Components are numbered by (cluster, smallest vertex).
std::vector<CompleteSegment3D> split_connected_components(const VertexClusterMap& labels,
                                                          const CanonicalCloud& canon,
                                                          double link_radius);

// Fills node_ids with the nodes of the segment's cluster that share a vertex with it.
void attach_contributing_nodes(std::span<CompleteSegment3D> segments,
                               std::span<const PartialSegment3D> nodes,
                               const ClusterAssignment& assignment);

}  // namespace pbox
