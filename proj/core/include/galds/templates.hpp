#pragma once

#include <cstdint>
#include <vector>

#include "galds/frames.hpp"
#include "galds/nn_layers.hpp"
#include "galds/vec3.hpp"

namespace galds {

inline constexpr int32_t kPipePoints = 17;
inline constexpr int32_t kBifurcationPoints = 23;
inline constexpr int32_t kRingPoints = 8;

// In-plane point layout shared by every section of one kind: a center point,
// an 8-point ring at r = R/2, an 8-point ring at r = R, and (bifurcations
// only) 6 junction connector points on r = R along the two child directions.
// `rho` is in units of the section radius; `theta` is measured from e1.
struct TemplateGraph {
  int32_t p = 0;
  std::vector<double> rho;
  std::vector<double> theta;
  EdgeList edges;
  std::vector<double> a_hat;  // dense p x p normalized adjacency
};

// Canonical pipe template (identical for every pipe section).
const TemplateGraph& pipe_template();

// Bifurcation template for a junction frame; connector placement depends on
// the child directions so the adjacency is per-section.
TemplateGraph build_bifurcation_template(const CrossSectionFrame& frame);

TemplateGraph build_template(const CrossSectionFrame& frame);

// World positions: center + R * rho * (cos(theta) e1 + sin(theta) e2).
std::vector<Vec3> template_world_points(const TemplateGraph& tpl,
                                        const CrossSectionFrame& frame);

// Static decoder inputs per point: (rho, cos theta, sin theta).
void template_local_coords(const TemplateGraph& tpl, std::vector<double>& out);

}  // namespace galds
