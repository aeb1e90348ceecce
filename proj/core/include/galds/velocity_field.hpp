#pragma once

#include <vector>

#include "galds/global_graph.hpp"
#include "galds/hydraulics.hpp"

namespace galds {

// Pointwise velocity in section-local components (axial, e1, e2). The field
// is stored in the local frame because the axial profile and the curvature
// perturbation are frame-invariant; world vectors are recovered through the
// section basis when needed.
struct VelocityField {
  std::vector<double> local;    // total_points x 3
  std::vector<double> u1d;      // sections x 3, (centerline_speed, 0, 0)
  double perturbation_scale = 0.0;
};

// Parabolic axial profile u_c (1 - rho^2) with an in-plane secondary
// component scale * kappa * R * u_c * rho (1 - rho^2) along e1. Wall points
// (rho = 1) are exactly zero.
VelocityField reconstruct_velocity(const GlobalGraph& g, const HydraulicSolution& h,
                                   double perturbation_scale);

// Local (axial, e1, e2) components to a world vector through the frame basis.
Vec3 local_to_world(const CrossSectionFrame& f, const double* local3);

}  // namespace galds
