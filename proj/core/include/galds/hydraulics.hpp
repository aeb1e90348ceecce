#pragma once

#include <cstdint>
#include <vector>

#include "galds/global_graph.hpp"

namespace galds {

// Poiseuille network solution on the section tree. Pressures are kinematic
// (p / rho); edge fluxes are oriented upstream -> downstream as stored in the
// graph edge list.
struct HydraulicSolution {
  double inlet_flux = 0.0;              // um^3/s
  std::vector<double> pressure;         // per section, outlets pinned to 0
  std::vector<double> edge_flux;        // per graph edge
  std::vector<double> section_flux;     // flux carried by each section
  std::vector<double> centerline_speed; // 2 Q / (pi R^2) per section, um/s
};

// Solves mass conservation with Hagen-Poiseuille edge conductances
// g = pi R^4 / (8 nu L), a prescribed inlet flux Q_in = pi u_t R_in^2 / 2
// (u_t is the inlet centerline speed of the parabolic profile), and zero
// pressure at every outlet. Exact O(C) elimination on the tree.
HydraulicSolution solve_hydraulics(const GlobalGraph& g, double u_t, double viscosity);

// Largest junction imbalance |sum in - sum out| relative to the inlet flux.
double max_flux_imbalance(const GlobalGraph& g, const HydraulicSolution& h);

}  // namespace galds
