#include "pseudobox/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "pseudobox/error.hpp"

namespace pbox {

void TriangleMesh::validate() const {
  if (normals.size() != vertices.size()) {
    throw DomainError("mesh needs exactly one normal per vertex");
  }
  for (const auto& n : normals) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-3) {
      throw DomainError("mesh normals must be unit length");
    }
  }
  const auto n = static_cast<std::uint32_t>(vertices.size());
  for (const auto& f : faces) {
    if (f[0] >= n || f[1] >= n || f[2] >= n) {
      throw DomainError("mesh face references a missing vertex");
    }
  }
}

void TriangleMesh::compute_normals() {
  normals.assign(vertices.size(), Eigen::Vector3d::Zero());
  for (const auto& f : faces) {
    // cross product length is twice the area, which is the weight we want
    const Eigen::Vector3d n =
        (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]);
    for (auto idx : f) normals[idx] += n;
  }
  for (auto& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ();
  }
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> TriangleMesh::edges() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(faces.size() * 3);
  for (const auto& f : faces) {
    for (int i = 0; i < 3; ++i) {
      const auto a = f[i];
      const auto b = f[(i + 1) % 3];
      if (a == b) continue;
      out.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace pbox
