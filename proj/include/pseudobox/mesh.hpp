#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pseudobox/geom.hpp"

namespace pbox {

struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<Eigen::Vector3d> normals;  // unit length, one per vertex
  std::vector<std::array<std::uint32_t, 3>> faces;

  size_t vertex_count() const { return vertices.size(); }

  // Face indices in range, one normal per vertex, normals unit within 1e-3.
  void validate() const;

  // Area-weighted vertex normals from the faces; overwrites `normals`.
  void compute_normals();

  // Unique undirected edges (a < b) implied by the faces, sorted.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges() const;
};

}  // namespace pbox
