#include "pseudobox/graph.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "pseudobox/error.hpp"

namespace pbox {

double overlap_ratio(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
  if (a.empty() || b.empty()) throw DomainError("overlap ratio of an empty point set");
  size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
}

SegmentGraph SegmentGraph::from_edges(size_t nodes, std::span<const NodePair> edges) {
  SegmentGraph g(nodes);
  for (const auto& [a, b] : edges) {
    if (a == b || a >= nodes || b >= nodes) throw DomainError("invalid edge");
    g.adjacency[a].push_back(b);
    g.adjacency[b].push_back(a);
  }
  for (auto& nbrs : g.adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return g;
}

size_t SegmentGraph::edge_count() const {
  size_t total = 0;
  for (const auto& nbrs : adjacency) total += nbrs.size();
  return total / 2;
}

std::vector<NodePair> SegmentGraph::edges() const {
  std::vector<NodePair> out;
  for (std::uint32_t a = 0; a < adjacency.size(); ++a) {
    for (auto b : adjacency[a]) {
      if (a < b) out.emplace_back(a, b);
    }
  }
  return out;
}

std::vector<VoxelKey> occupied_cells(const PartialSegment3D& node, const CanonicalCloud& canon,
                                     const VoxelGridSpec& grid) {
  std::vector<VoxelKey> cells;
  cells.reserve(node.points.size());
  for (auto idx : node.points) cells.push_back(voxel_key_of(grid, canon[idx]));
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

namespace {

// For each node, the higher-numbered nodes it shares a cell with.
std::vector<std::vector<std::uint32_t>> partner_lists(std::span<const PartialSegment3D> nodes,
                                                      const CanonicalCloud& canon,
                                                      const VoxelGridSpec& grid) {
  const long n = static_cast<long>(nodes.size());
  std::vector<std::vector<VoxelKey>> cells(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) cells[i] = occupied_cells(nodes[i], canon, grid);

  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> members;
  for (std::uint32_t i = 0; i < nodes.size(); ++i) {
    for (const auto& key : cells[i]) members[key].push_back(i);  // ascending node order
  }

  std::vector<std::vector<std::uint32_t>> partners(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    auto& out = partners[i];
    for (const auto& key : cells[i]) {
      const auto& m = members.at(key);
      auto it = std::upper_bound(m.begin(), m.end(), static_cast<std::uint32_t>(i));
      out.insert(out.end(), it, m.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return partners;
}

}  // namespace

std::vector<NodePair> candidate_pairs(std::span<const PartialSegment3D> nodes,
                                      const CanonicalCloud& canon, const VoxelGridSpec& grid) {
  const auto partners = partner_lists(nodes, canon, grid);
  std::vector<NodePair> out;
  for (std::uint32_t i = 0; i < partners.size(); ++i) {
    for (auto j : partners[i]) out.emplace_back(i, j);
  }
  return out;
}

SegmentGraph build_edges(std::span<const PartialSegment3D> nodes, const CanonicalCloud& canon,
                         const VoxelGridSpec& grid, double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("edge threshold must lie in (0, 1)");
  auto partners = partner_lists(nodes, canon, grid);
  const long n = static_cast<long>(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    auto& list = partners[i];
    std::erase_if(list, [&](std::uint32_t j) {
      return !(overlap_ratio(nodes[i].points, nodes[j].points) > theta);
    });
  }
  std::vector<NodePair> edges;
  for (std::uint32_t i = 0; i < partners.size(); ++i) {
    for (auto j : partners[i]) edges.emplace_back(i, j);
  }
  return SegmentGraph::from_edges(nodes.size(), edges);
}

void WalkConfig::validate() const {
  if (walks_per_node <= 0 || walk_length <= 0 || window <= 0 || dimension <= 0 ||
      negatives <= 0 || epochs <= 0 || !(learning_rate > 0.0) || !(min_learning_rate > 0.0)) {
    throw ConfigError("walk configuration values must all be positive");
  }
  if (window >= walk_length) throw ConfigError("walk window must be shorter than the walk length");
}

std::vector<Walk> random_walks(const SegmentGraph& graph, const WalkConfig& cfg) {
  const size_t n = graph.node_count();
  if (n == 0) throw DomainError("random walks on an empty graph");
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::uint32_t> order(n);
  std::vector<Walk> walks;
  walks.reserve(n * static_cast<size_t>(cfg.walks_per_node));
  for (int round = 0; round < cfg.walks_per_node; ++round) {
    std::iota(order.begin(), order.end(), 0u);
    std::shuffle(order.begin(), order.end(), rng);
    for (auto start : order) {
      Walk walk{start};
      walk.reserve(static_cast<size_t>(cfg.walk_length));
      while (walk.size() < static_cast<size_t>(cfg.walk_length)) {
        const auto& nbrs = graph.adjacency[walk.back()];
        if (nbrs.empty()) break;
        std::uniform_int_distribution<size_t> pick(0, nbrs.size() - 1);
        walk.push_back(nbrs[pick(rng)]);
      }
      walks.push_back(std::move(walk));
    }
  }
  return walks;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log σ(x) without overflow
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

struct PlainAccess {
  static double load(const double& x) { return x; }
  static void store(double& x, double v) { x = v; }
};

// Hogwild updates without a formal data race.
struct RelaxedAccess {
  static double load(const double& x) {
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  }
  static void store(double& x, double v) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  }
};

// SGD step on one target: accumulates the center gradient into `grad_u` and updates `v`.
template <typename Access>
void sgns_target(const double* u, double* v, double label, double lr, double* grad_u, size_t d) {
  double dot = 0.0;
  for (size_t k = 0; k < d; ++k) dot += Access::load(u[k]) * Access::load(v[k]);
  // descent direction of -log σ(±dot)
  const double g = (label - sigmoid(dot)) * lr;
  for (size_t k = 0; k < d; ++k) {
    grad_u[k] += g * Access::load(v[k]);
    Access::store(v[k], Access::load(v[k]) + g * Access::load(u[k]));
  }
}

template <typename Access>
void sgns_apply(double* u, double* grad_u, size_t d) {
  for (size_t k = 0; k < d; ++k) {
    Access::store(u[k], Access::load(u[k]) + grad_u[k]);
    grad_u[k] = 0.0;
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xbf58476d1ce4e5b9ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

template <typename Access>
void train_walk(const Walk& walk, EmbeddingMatrix& in, EmbeddingMatrix& out,
                const std::vector<double>& cumulative, const WalkConfig& cfg, double lr,
                std::mt19937_64& rng, std::vector<double>& grad_u) {
  const size_t d = in.cols();
  const double total = cumulative.back();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long len = static_cast<long>(walk.size());
  for (long i = 0; i < len; ++i) {
    double* u = in.row(walk[i]).data();
    const long lo = std::max(0L, i - cfg.window);
    const long hi = std::min(len - 1, i + static_cast<long>(cfg.window));
    for (long j = lo; j <= hi; ++j) {
      if (j == i) continue;
      const auto ctx = walk[j];
      sgns_target<Access>(u, out.row(ctx).data(), 1.0, lr, grad_u.data(), d);
      for (int s = 0; s < cfg.negatives; ++s) {
        const double r = unit(rng) * total;
        auto neg = static_cast<std::uint32_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
        neg = std::min<std::uint32_t>(neg, static_cast<std::uint32_t>(cumulative.size() - 1));
        if (neg == ctx) continue;
        sgns_target<Access>(u, out.row(neg).data(), 0.0, lr, grad_u.data(), d);
      }
      sgns_apply<Access>(u, grad_u.data(), d);
    }
  }
}

}  // namespace

double sgns_loss(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                 const std::vector<Eigen::VectorXd>& negatives) {
  double loss = -log_sigmoid(center.dot(context));
  for (const auto& n : negatives) loss -= log_sigmoid(-center.dot(n));
  return loss;
}

SgnsGradient sgns_gradient(const Eigen::VectorXd& center, const Eigen::VectorXd& context,
                           const std::vector<Eigen::VectorXd>& negatives) {
  SgnsGradient g;
  g.loss = sgns_loss(center, context, negatives);
  const double pos = sigmoid(center.dot(context)) - 1.0;
  g.center = pos * context;
  g.context = pos * center;
  for (const auto& n : negatives) {
    const double s = sigmoid(center.dot(n));
    g.center += s * n;
    g.negatives.push_back(s * center);
  }
  return g;
}

void sgns_sgd_step(std::span<double> center, std::span<double> context,
                   std::span<const std::span<double>> negatives, double lr) {
  const size_t d = center.size();
  if (context.size() != d) throw DomainError("sgns vectors differ in dimension");
  std::vector<double> grad_u(d, 0.0);
  sgns_target<PlainAccess>(center.data(), context.data(), 1.0, lr, grad_u.data(), d);
  for (const auto& n : negatives) {
    if (n.size() != d) throw DomainError("sgns vectors differ in dimension");
    sgns_target<PlainAccess>(center.data(), n.data(), 0.0, lr, grad_u.data(), d);
  }
  sgns_apply<PlainAccess>(center.data(), grad_u.data(), d);
}

EmbeddingMatrix train_skipgram(std::span<const Walk> walks, size_t node_count,
                               const WalkConfig& cfg) {
  cfg.validate();
  if (walks.empty()) throw DomainError("skip-gram training needs at least one walk");
  const auto d = static_cast<size_t>(cfg.dimension);
  EmbeddingMatrix in(node_count, d);
  EmbeddingMatrix out(node_count, d);

  std::mt19937_64 init_rng(mix_seed(cfg.seed, 0x1217, 0));
  std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(d),
                                              0.5 / static_cast<double>(d));
  for (auto& x : in.data()) x = init(init_rng);

  std::vector<double> freq(node_count, 0.0);
  size_t tokens = 0;
  for (const auto& w : walks) {
    for (auto id : w) {
      if (id >= node_count) throw DomainError("walk references an unknown node");
      freq[id] += 1.0;
    }
    tokens += w.size();
  }
  std::vector<double> cumulative(node_count);
  double acc = 0.0;
  for (size_t i = 0; i < node_count; ++i) {
    acc += std::pow(freq[i], 0.75);
    cumulative[i] = acc;
  }

  // learning rate decays linearly per walk, indexed by the walk's global position
  std::vector<size_t> offsets(walks.size());
  size_t running = 0;
  for (size_t w = 0; w < walks.size(); ++w) {
    offsets[w] = running;
    running += walks[w].size();
  }
  const double total_tokens = static_cast<double>(tokens) * cfg.epochs;
  auto lr_at = [&](int epoch, size_t w) {
    const double progress = (static_cast<double>(epoch) * tokens + offsets[w]) / total_tokens;
    return std::max(cfg.min_learning_rate,
                    cfg.learning_rate - (cfg.learning_rate - cfg.min_learning_rate) * progress);
  };

  const long n_walks = static_cast<long>(walks.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.deterministic) {
      std::vector<double> grad_u(d, 0.0);
      for (long w = 0; w < n_walks; ++w) {
        std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, w));
        train_walk<PlainAccess>(walks[w], in, out, cumulative, cfg, lr_at(epoch, w), rng, grad_u);
      }
    } else {
#pragma omp parallel
      {
        std::vector<double> grad_u(d, 0.0);
#pragma omp for schedule(dynamic, 16)
        for (long w = 0; w < n_walks; ++w) {
          std::mt19937_64 rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, w));
          train_walk<RelaxedAccess>(walks[w], in, out, cumulative, cfg, lr_at(epoch, w), rng,
                                    grad_u);
        }
      }
    }
  }
  return in;
}

EmbeddingMatrix embed_graph(const SegmentGraph& graph, const WalkConfig& cfg) {
  cfg.validate();
  const auto walks = random_walks(graph, cfg);
  return train_skipgram(walks, graph.node_count(), cfg);
}

}  // namespace pbox
