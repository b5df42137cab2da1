#include "pseudobox/meshref.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "pseudobox/error.hpp"
#include "pseudobox/graph.hpp"

namespace pbox {

std::vector<MeshSegment> segment_mesh_felzenszwalb(const TriangleMesh& mesh, double k,
                                                   std::uint32_t min_size) {
  if (mesh.faces.empty()) throw DomainError("mesh segmentation needs at least one face");
  if (!(k > 0.0)) throw ConfigError("segmentation scale k must be positive");
  mesh.validate();

  struct Edge {
    double w;
    std::uint32_t a, b;
  };
  std::vector<Edge> edges;
  for (const auto& [a, b] : mesh.edges()) {
    const double w = 1.0 - std::max(0.0, mesh.normals[a].dot(mesh.normals[b]));
    edges.push_back({w, a, b});
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });

  const size_t n = mesh.vertex_count();
  DisjointSets sets(n);
  std::vector<double> threshold(n, k);
  for (const auto& e : edges) {
    auto a = sets.find(e.a);
    auto b = sets.find(e.b);
    if (a == b) continue;
    if (e.w <= threshold[a] && e.w <= threshold[b]) {
      const auto root = sets.unite(a, b);
      threshold[root] = e.w + k / sets.size_of(root);
    }
  }
  for (const auto& e : edges) {
    const auto a = sets.find(e.a);
    const auto b = sets.find(e.b);
    if (a != b && (sets.size_of(a) < min_size || sets.size_of(b) < min_size)) sets.unite(a, b);
  }

  std::unordered_map<std::uint32_t, std::uint32_t> slot;
  std::vector<MeshSegment> out;
  for (std::uint32_t v = 0; v < n; ++v) {
    const auto root = sets.find(v);
    auto [it, fresh] = slot.try_emplace(root, static_cast<std::uint32_t>(out.size()));
    if (fresh) out.push_back({static_cast<std::uint32_t>(out.size()), {}});
    out[it->second].vertices.push_back(v);
  }
  return out;
}

std::vector<CompleteSegment3D> fuse_msr(const TriangleMesh& mesh,
                                        std::span<const MeshSegment> mesh_segments,
                                        std::span<const CompleteSegment3D> complete,
                                        const CanonicalCloud& canon, double min_overlap) {
  if (canon.size() != mesh.vertex_count()) {
    throw ConfigError("mesh refinement needs the mesh vertices as canonical cloud");
  }
  for (size_t i = 0; i < canon.size(); ++i) {
    if (canon[static_cast<std::uint32_t>(i)] != mesh.vertices[i]) {
      throw ConfigError("canonical cloud does not match the mesh vertices");
    }
  }
  constexpr std::uint32_t kNone = UINT32_MAX;
  std::vector<std::uint32_t> label(canon.size(), kNone);
  std::map<std::uint32_t, const CompleteSegment3D*> by_id;
  for (const auto& seg : complete) {
    if (seg.points.empty()) throw DomainError("complete segment without points");
    by_id[seg.id] = &seg;
    for (auto v : seg.points) {
      if (v >= canon.size()) throw DomainError("vertex index outside the canonical cloud");
      if (label[v] != kNone) throw DomainError("complete segments share a vertex");
      label[v] = seg.id;
    }
  }

  // best complete segment per mesh segment
  std::vector<std::uint32_t> target(mesh_segments.size(), kNone);
#pragma omp parallel for schedule(dynamic)
  for (long m = 0; m < static_cast<long>(mesh_segments.size()); ++m) {
    const auto& ms = mesh_segments[m];
    if (ms.vertices.empty()) continue;
    std::map<std::uint32_t, size_t> hits;
    for (auto v : ms.vertices) {
      if (v < label.size() && label[v] != kNone) ++hits[label[v]];
    }
    double best = 0.0;
    for (const auto& [id, count] : hits) {
      const double ratio = static_cast<double>(count) /
                           static_cast<double>(std::min(ms.vertices.size(), by_id.at(id)->points.size()));
      if (ratio > best) {  // ascending id keeps the lowest id on ties
        best = ratio;
        target[m] = id;
      }
    }
    if (!(best > min_overlap)) target[m] = kNone;
  }

  std::vector<std::uint32_t> fused = label;
  for (size_t m = 0; m < mesh_segments.size(); ++m) {
    if (target[m] == kNone) continue;
    for (auto v : mesh_segments[m].vertices) {
      if (v >= fused.size()) throw DomainError("mesh segment vertex outside the mesh");
      fused[v] = target[m];
    }
  }

  std::map<std::uint32_t, CompleteSegment3D> grouped;
  for (std::uint32_t v = 0; v < fused.size(); ++v) {
    if (fused[v] == kNone) continue;
    auto& seg = grouped[fused[v]];
    seg.points.push_back(v);
  }
  std::vector<CompleteSegment3D> out;
  for (auto& [id, seg] : grouped) {
    const auto* src = by_id.at(id);
    seg.id = id;
    seg.cluster = src->cluster;
    seg.node_ids = src->node_ids;
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace pbox
