#include "galds/hydraulics.hpp"

#include <cmath>
#include <numbers>

#include "galds/error.hpp"

namespace galds {
namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

HydraulicSolution solve_hydraulics(const GlobalGraph& g, double u_t, double viscosity) {
  if (viscosity <= 0.0) fail(ErrorCode::validation, "viscosity must be positive");
  if (u_t <= 0.0) fail(ErrorCode::validation, "inlet centerline speed must be positive");

  const int64_t c = g.section_count();
  const auto& frames = g.plan.frames;
  const auto& edges = g.plan.section_edges;

  // Edge conductances. R is averaged over the endpoints, L is the centerline
  // arc gap, which the frame builder guarantees to be positive.
  std::vector<double> cond(edges.size());
  std::vector<int32_t> parent_edge(c, -1);
  std::vector<std::vector<int32_t>> child_edges(c);
  for (size_t e = 0; e < edges.size(); ++e) {
    const int32_t u = edges[e].first;
    const int32_t v = edges[e].second;
    const double r = 0.5 * (frames[u].radius + frames[v].radius);
    const double len = std::abs(g.arc[v] - g.arc[u]);
    if (len <= 0.0) fail(ErrorCode::numeric, "zero-length section edge in hydraulic solve");
    cond[e] = kPi * r * r * r * r / (8.0 * viscosity * len);
    parent_edge[v] = static_cast<int32_t>(e);
    child_edges[u].push_back(static_cast<int32_t>(e));
  }

  std::vector<char> is_outlet(c, 0);
  for (int32_t o : g.outlets) is_outlet[o] = 1;

  const int32_t root = g.plan.inlet;
  const double r_in = frames[root].radius;
  const double q_in = 0.5 * kPi * u_t * r_in * r_in;

  // Upward elimination: express p_i = alpha_i + beta_i * p_parent. Sections
  // are emitted in depth-first preorder, so descending index order visits
  // children before parents. Outlets carry the Dirichlet value directly.
  std::vector<double> alpha(c, 0.0), beta(c, 0.0);
  for (int32_t i = static_cast<int32_t>(c) - 1; i >= 0; --i) {
    if (is_outlet[i]) continue;
    double diag = 0.0, rhs = 0.0;
    for (int32_t e : child_edges[i]) {
      const int32_t ch = edges[e].second;
      diag += cond[e] * (1.0 - beta[ch]);
      rhs += cond[e] * alpha[ch];
    }
    if (i == root) {
      if (diag <= 0.0) fail(ErrorCode::numeric, "hydraulic system is singular: no outlet path");
      alpha[i] = (q_in + rhs) / diag;
      beta[i] = 0.0;
    } else {
      const double gp = cond[parent_edge[i]];
      diag += gp;
      if (diag <= 0.0) fail(ErrorCode::numeric, "hydraulic system is singular");
      alpha[i] = rhs / diag;
      beta[i] = gp / diag;
    }
  }

  HydraulicSolution h;
  h.inlet_flux = q_in;
  h.pressure.assign(c, 0.0);
  for (int32_t i = 0; i < c; ++i) {
    if (is_outlet[i]) continue;
    const double pp = (i == root) ? 0.0 : h.pressure[edges[parent_edge[i]].first];
    h.pressure[i] = alpha[i] + beta[i] * pp;
  }

  h.edge_flux.assign(edges.size(), 0.0);
  for (size_t e = 0; e < edges.size(); ++e)
    h.edge_flux[e] = cond[e] * (h.pressure[edges[e].first] - h.pressure[edges[e].second]);

  h.section_flux.assign(c, 0.0);
  h.section_flux[root] = q_in;
  for (int32_t i = 0; i < c; ++i)
    if (i != root) h.section_flux[i] = h.edge_flux[parent_edge[i]];

  h.centerline_speed.assign(c, 0.0);
  for (int32_t i = 0; i < c; ++i) {
    const double r = frames[i].radius;
    h.centerline_speed[i] = 2.0 * h.section_flux[i] / (kPi * r * r);
  }
  return h;
}

double max_flux_imbalance(const GlobalGraph& g, const HydraulicSolution& h) {
  const int64_t c = g.section_count();
  std::vector<double> net(c, 0.0);
  for (size_t e = 0; e < g.plan.section_edges.size(); ++e) {
    net[g.plan.section_edges[e].first] -= h.edge_flux[e];
    net[g.plan.section_edges[e].second] += h.edge_flux[e];
  }
  net[g.plan.inlet] += h.inlet_flux;
  for (int32_t o : g.outlets) net[o] -= h.section_flux[o];
  double worst = 0.0;
  for (int64_t i = 0; i < c; ++i) worst = std::max(worst, std::abs(net[i]));
  return worst / std::max(h.inlet_flux, 1e-300);
}

}  // namespace galds
