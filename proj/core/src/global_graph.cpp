#include "galds/global_graph.hpp"

#include <algorithm>

#include "galds/error.hpp"

namespace galds {

GlobalGraph assemble_global_graph(FramePlan plan) {
  GlobalGraph g;
  g.c = static_cast<int32_t>(plan.frames.size());
  if (g.c < 2) fail(ErrorCode::validation, "geometry needs at least two sections");
  g.edges = plan.section_edges;
  g.a_hat = csr_normalized_adjacency(g.c, g.edges);

  // Connectivity: every section must be reachable from the inlet.
  {
    std::vector<int32_t> seen(static_cast<size_t>(g.c), 0);
    std::vector<std::vector<int32_t>> adj(static_cast<size_t>(g.c));
    for (auto [u, v] : g.edges) {
      adj[static_cast<size_t>(u)].push_back(v);
      adj[static_cast<size_t>(v)].push_back(u);
    }
    std::vector<int32_t> stack = {plan.inlet};
    seen[static_cast<size_t>(plan.inlet)] = 1;
    while (!stack.empty()) {
      int32_t at = stack.back();
      stack.pop_back();
      for (int32_t n : adj[static_cast<size_t>(at)])
        if (!seen[static_cast<size_t>(n)]) {
          seen[static_cast<size_t>(n)] = 1;
          stack.push_back(n);
        }
    }
    for (int32_t i = 0; i < g.c; ++i)
      if (!seen[static_cast<size_t>(i)])
        fail(ErrorCode::validation, "orphan section " + std::to_string(i));
  }

  g.arc.resize(static_cast<size_t>(g.c));
  double max_arc = 0.0;
  for (int32_t i = 0; i < g.c; ++i) {
    g.arc[static_cast<size_t>(i)] = plan.frames[static_cast<size_t>(i)].arc_to_root;
    max_arc = std::max(max_arc, g.arc[static_cast<size_t>(i)]);
  }
  if (max_arc <= 0.0) fail(ErrorCode::validation, "degenerate geometry with zero extent");
  g.c_feature.resize(static_cast<size_t>(g.c));
  for (int32_t i = 0; i < g.c; ++i)
    g.c_feature[static_cast<size_t>(i)] = g.arc[static_cast<size_t>(i)] / max_arc;

  g.inlets = {plan.inlet};
  g.outlets = plan.outlets;
  if (g.outlets.empty()) fail(ErrorCode::validation, "geometry has no outlet sections");
  for (int32_t o : g.outlets)
    if (o == plan.inlet) fail(ErrorCode::validation, "inlet and outlet sections overlap");

  g.kinds.resize(static_cast<size_t>(g.c));
  g.point_offset.resize(static_cast<size_t>(g.c));
  g.bif_index.assign(static_cast<size_t>(g.c), -1);
  int32_t at = 0;
  for (int32_t i = 0; i < g.c; ++i) {
    const CrossSectionFrame& f = plan.frames[static_cast<size_t>(i)];
    g.kinds[static_cast<size_t>(i)] = f.kind;
    g.point_offset[static_cast<size_t>(i)] = at;
    if (f.kind == SectionKind::bifurcation) {
      g.bif_index[static_cast<size_t>(i)] = static_cast<int32_t>(g.bif_templates.size());
      g.bif_templates.push_back(build_bifurcation_template(f));
      at += kBifurcationPoints;
    } else {
      at += kPipePoints;
    }
  }
  g.total_points = at;
  g.plan = std::move(plan);
  return g;
}

GlobalGraph build_geometry(const Skeleton& skeleton, double spacing) {
  return assemble_global_graph(build_frames(skeleton, spacing));
}

}  // namespace galds
