#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pseudobox/cluster.hpp"
#include "pseudobox/lift.hpp"
#include "pseudobox/mesh.hpp"

namespace pbox {

struct MeshSegment {
  std::uint32_t id = 0;
  std::vector<std::uint32_t> vertices;  // sorted
};

// Graph-based segmentation (Felzenszwalb & Huttenlocher) on the mesh edge graph with weights
// w(u, v) = 1 - max(0, n_u · n_v). Components merge when the edge weight is at most both
// internal thresholds Int(C) + k / |C|; afterwards components smaller than min_size are merged
// across their cheapest edge. Isolated vertices remain singleton segments. Segments are
// numbered by smallest vertex.
std::vector<MeshSegment> segment_mesh_felzenszwalb(const TriangleMesh& mesh, double k,
                                                   std::uint32_t min_size);

// Relabels each mesh segment with the complete segment it overlaps most (overlap ratio, lowest id
// on ties) when that overlap exceeds min_overlap and is positive; other mesh segments are dropped.
// Fused mesh vertices take their new label; all other vertices keep their complete-segment label.
// Output is grouped by id, ascending; segments left without vertices vanish.
std::vector<CompleteSegment3D> fuse_msr(const TriangleMesh& mesh,
                                        std::span<const MeshSegment> mesh_segments,
                                        std::span<const CompleteSegment3D> complete,
                                        const CanonicalCloud& canon, double min_overlap = 0.0);

}  // namespace pbox
