#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pseudobox/geom.hpp"
#include "pseudobox/lift.hpp"

namespace pbox {

// |a ∩ b| / min(|a|, |b|) over sorted unique index sets. Throws DomainError on an empty set.
double overlap_ratio(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

using NodePair = std::pair<std::uint32_t, std::uint32_t>;

struct SegmentGraph {
  std::vector<std::vector<std::uint32_t>> adjacency;  // sorted, symmetric, no self-loops

  SegmentGraph() = default;
  explicit SegmentGraph(size_t nodes) : adjacency(nodes) {}
  // Edges must be unique pairs with a != b.
  static SegmentGraph from_edges(size_t nodes, std::span<const NodePair> edges);

  size_t node_count() const { return adjacency.size(); }
  size_t edge_count() const;
  // (a, b) with a < b, ascending.
  std::vector<NodePair> edges() const;
};

// Sorted cell keys occupied by a node's canonical vertices.
std::vector<VoxelKey> occupied_cells(const PartialSegment3D& node, const CanonicalCloud& canon,
                                     const VoxelGridSpec& grid);

// Pairs (a < b) of nodes sharing at least one occupied grid cell, ascending.
std::vector<NodePair> candidate_pairs(std::span<const PartialSegment3D> nodes,
                                      const CanonicalCloud& canon, const VoxelGridSpec& grid);

// Edge between two candidate nodes iff overlap_ratio > theta. Parallel over nodes.
SegmentGraph build_edges(std::span<const PartialSegment3D> nodes, const CanonicalCloud& canon,
                         const VoxelGridSpec& grid, double theta);

struct WalkConfig {
  int walks_per_node = 10;
  int walk_length = 40;
  int window = 5;
  int dimension = 64;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;
  std::uint64_t seed = 0;
  // Off: Hogwild-style concurrent updates; reproducible only statistically.
  bool deterministic = true;

  void validate() const;
};

using Walk = std::vector<std::uint32_t>;

// cfg.walks_per_node rounds; each round visits every node once in a freshly shuffled order and
// starts a uniform random walk of cfg.walk_length nodes there, stopping early at isolated nodes.
std::vector<Walk> random_walks(const SegmentGraph& graph, const WalkConfig& cfg);

class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  std::span<double> row(size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(size_t i) const { return {data_.data() + i * cols_, cols_}; }
  double& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }
  double operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Negative-sampling skip-gram objective for one (center, context, negatives) tuple:
//   L = -log σ(u·v_ctx) - Σ log σ(-u·v_neg)
struct SgnsGradient {
  double loss = 0.0;
  Eigen::VectorXd center;
  Eigen::VectorXd context;
  std::vector<Eigen::VectorXd> negatives;
};

double sgns_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                 const std::vector<Eigen::VectorXd>& negatives);
SgnsGradient sgns_gradient(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                           const std::vector<Eigen::VectorXd>& negatives);

// One plain SGD step of size lr on L, in place. This is the update the trainer applies.
void sgns_sgd_step(std::span<double> center, std::span<double> context,
                   std::span<const std::span<double>> negatives, double lr);

// Trains center ("input") vectors for `node_count` nodes over the walk corpus.
EmbeddingMatrix train_skipgram(std::span<const Walk> walks, size_t node_count,
                               const WalkConfig& cfg);

EmbeddingMatrix embed_graph(const SegmentGraph& graph, const WalkConfig& cfg);

}  // namespace pbox
