#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "galds/skeleton.hpp"
#include "galds/vec3.hpp"

namespace galds {

enum class SectionKind : int32_t { pipe = 0, bifurcation = 1 };

// Oriented cross-section sample along the centerline. (tangent, e1, e2) is a
// right-handed orthonormal frame; e1 follows the local curvature normal and
// falls back to a fixed axis rule on straight runs, so in-plane fields keep
// the turning direction aligned with the first frame axis.
struct CrossSectionFrame {
  Vec3 center{};
  Vec3 tangent{};
  Vec3 e1{};
  Vec3 e2{};
  double radius = 0.0;
  double curvature = 0.0;
  double arc_to_root = 0.0;
  SectionKind kind = SectionKind::pipe;
  int32_t branch = -1;
  int32_t n_children = 0;     // >0 only on bifurcation frames
  Vec3 child_dir[2] = {{}, {}};
};

// Frames plus the section connectivity induced by the resampling walk.
// frames[0] is the inlet (root) frame; outlets are the leaf frames.
struct FramePlan {
  std::vector<CrossSectionFrame> frames;
  std::vector<std::pair<int32_t, int32_t>> section_edges;  // consecutive sections
  int32_t inlet = 0;
  std::vector<int32_t> outlets;
};

// Resamples every branch at arc-length intervals of ~spacing and emits one
// shared frame per junction. Rejects trifurcations, zero-length segments, and
// spacing coarser than the shortest branch.
FramePlan build_frames(const Skeleton& skeleton, double spacing);

}  // namespace galds
