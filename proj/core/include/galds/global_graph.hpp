#pragma once

#include <cstdint>
#include <vector>

#include "galds/frames.hpp"
#include "galds/nn_layers.hpp"
#include "galds/templates.hpp"

namespace galds {

// Section-level view of a geometry: one node per cross-section frame with
// edges between consecutive sections, plus the per-section template layout
// and flattened point bookkeeping used by the solvers and exporters.
struct GlobalGraph {
  FramePlan plan;

  int32_t c = 0;  // number of sections
  EdgeList edges;
  CsrMatrix a_hat;
  std::vector<double> arc;        // arc distance to root per section
  std::vector<double> c_feature;  // arc / max arc, in [0, 1]
  std::vector<int32_t> inlets;
  std::vector<int32_t> outlets;

  std::vector<SectionKind> kinds;
  std::vector<int32_t> point_offset;  // per section into the flat point array
  int32_t total_points = 0;
  std::vector<TemplateGraph> bif_templates;
  std::vector<int32_t> bif_index;  // per section, -1 for pipes

  const TemplateGraph& section_template(int32_t s) const {
    int32_t bi = bif_index[static_cast<size_t>(s)];
    return bi < 0 ? pipe_template() : bif_templates[static_cast<size_t>(bi)];
  }
  int32_t section_points(int32_t s) const {
    return kinds[static_cast<size_t>(s)] == SectionKind::pipe ? kPipePoints
                                                              : kBifurcationPoints;
  }
  const CrossSectionFrame& frame(int32_t s) const {
    return plan.frames[static_cast<size_t>(s)];
  }
  int32_t section_count() const { return c; }
};

GlobalGraph assemble_global_graph(FramePlan plan);
GlobalGraph build_geometry(const Skeleton& skeleton, double spacing);

// Point-index boundaries of each section, [bounds[s], bounds[s+1]), for
// per-section error grouping over flattened point fields.
inline std::vector<int64_t> section_bounds(const GlobalGraph& g) {
  std::vector<int64_t> b(g.point_offset.begin(), g.point_offset.end());
  b.push_back(g.total_points);
  return b;
}

}  // namespace galds
