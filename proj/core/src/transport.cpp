#include "galds/transport.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "galds/error.hpp"

namespace galds {
namespace {

constexpr double kPi = std::numbers::pi;

// Junction fill-in points can sit arbitrarily close to a ring point; the
// exchange length is floored at a quarter radius so one tight pair does not
// dominate the explicit step bound.
constexpr double kMinExchangeFrac = 0.25;

}  // namespace

TransportSimulator::TransportSimulator(const GlobalGraph& g, const VelocityField& vel,
                                       const HydraulicSolution& hyd,
                                       const TransportParams& params, const TransportBC& bc,
                                       ReactionField reaction)
    : g_(g) {
  if (params.diffusion < 0.0) fail(ErrorCode::validation, "diffusion must be nonnegative");
  if (params.k_plus < 0.0 || params.k_plus_prime < 0.0)
    fail(ErrorCode::validation, "reaction rates must be nonnegative");
  (void)vel;

  const int64_t c = g.section_count();
  const int64_t n = g.total_points;
  const auto& frames = g.plan.frames;
  const auto& sedges = g.plan.section_edges;

  // Each section owns half of every adjacent centerline gap; points split the
  // section volume evenly.
  std::vector<double> owned(c, 0.0);
  for (const auto& [u, v] : sedges) {
    const double half = 0.5 * std::abs(g.arc[v] - g.arc[u]);
    owned[u] += half;
    owned[v] += half;
  }
  vol_.assign(n, 0.0);
  for (int64_t s = 0; s < c; ++s) {
    const TemplateGraph& tpl = g.section_template(static_cast<int32_t>(s));
    if (owned[s] <= 0.0) fail(ErrorCode::numeric, "section owns no centerline length");
    const double r = frames[s].radius;
    const double per_point = kPi * r * r * owned[s] / tpl.p;
    for (int32_t k = 0; k < tpl.p; ++k) vol_[g.point_offset[s] + k] = per_point;
  }

  // Diffusion follows the template edges inside a section and the matched
  // point columns between sections.
  for (int64_t s = 0; s < c; ++s) {
    const CrossSectionFrame& f = frames[s];
    const TemplateGraph& tpl = g.section_template(static_cast<int32_t>(s));
    const std::vector<Vec3> pts = template_world_points(tpl, f);
    const double floor_h = kMinExchangeFrac * f.radius;
    for (const auto& [a, b] : tpl.edges) {
      const int64_t i = g.point_offset[s] + a;
      const int64_t j = g.point_offset[s] + b;
      const double h = std::max(norm(pts[a] - pts[b]), floor_h);
      const double coef = params.diffusion * 0.5 * (vol_[i] + vol_[j]) / (h * h);
      diff_edges_.push_back({static_cast<int32_t>(i), static_cast<int32_t>(j), coef});
    }
  }
  for (const auto& [u, v] : sedges) {
    const double h = std::abs(g.arc[v] - g.arc[u]);
    for (int32_t k = 0; k < kPipePoints; ++k) {
      const int64_t i = g.point_offset[u] + k;
      const int64_t j = g.point_offset[v] + k;
      const double coef = params.diffusion * 0.5 * (vol_[i] + vol_[j]) / (h * h);
      diff_edges_.push_back({static_cast<int32_t>(i), static_cast<int32_t>(j), coef});
    }
  }

  // The carried species moves along axial columns. The section flux is split
  // with the discrete parabolic weights w_k ~ (1 - rho_k^2); the weights are
  // shared by every edge, so a column conserves mass exactly wherever the
  // hydraulic fluxes do.
  const TemplateGraph& base = pipe_template();
  double wsum = 0.0;
  std::array<double, kPipePoints> w{};
  for (int32_t k = 0; k < kPipePoints; ++k) {
    w[k] = 1.0 - base.rho[k] * base.rho[k];
    wsum += w[k];
  }
  for (int32_t k = 0; k < kPipePoints; ++k) w[k] /= wsum;

  for (size_t e = 0; e < sedges.size(); ++e) {
    int32_t u = sedges[e].first, v = sedges[e].second;
    double q = hyd.edge_flux[e];
    if (q < 0.0) {
      std::swap(u, v);
      q = -q;
    }
    for (int32_t k = 0; k < kPipePoints; ++k) {
      if (w[k] <= 0.0) continue;
      adv_edges_.push_back({static_cast<int32_t>(g.point_offset[u] + k),
                            static_cast<int32_t>(g.point_offset[v] + k), q * w[k]});
    }
  }
  for (int32_t o : g.outlets) {
    const double q = hyd.section_flux[o];
    for (int32_t k = 0; k < kPipePoints; ++k) {
      if (w[k] <= 0.0) continue;
      outflow_.push_back({static_cast<int32_t>(g.point_offset[o] + k), -1, q * w[k]});
    }
  }

  if (reaction.k_plus.empty()) reaction.k_plus.assign(n, params.k_plus);
  if (reaction.k_plus_prime.empty()) reaction.k_plus_prime.assign(n, params.k_plus_prime);
  if (static_cast<int64_t>(reaction.k_plus.size()) != n ||
      static_cast<int64_t>(reaction.k_plus_prime.size()) != n)
    fail(ErrorCode::validation, "reaction field size does not match the point count");
  kp_ = std::move(reaction.k_plus);
  kpp_ = std::move(reaction.k_plus_prime);

  bc_n0_in_ = bc.n_in;
  bc_n0_out_ = bc.n_out;
  bc_np_in_ = bc.lambda_in * bc.n_in;
  is_inlet_point_.assign(n, 0);
  for (int32_t in : g.inlets) {
    const TemplateGraph& tpl = g.section_template(in);
    for (int32_t k = 0; k < tpl.p; ++k) {
      dirichlet_n0_.push_back(static_cast<int32_t>(g.point_offset[in] + k));
      dirichlet_np_.push_back(static_cast<int32_t>(g.point_offset[in] + k));
      is_inlet_point_[g.point_offset[in] + k] = 1;
    }
  }
  for (int32_t o : g.outlets) {
    const TemplateGraph& tpl = g.section_template(o);
    for (int32_t k = 0; k < tpl.p; ++k)
      dirichlet_n0_.push_back(static_cast<int32_t>(g.point_offset[o] + k));
  }

  // Exact positivity bound: the explicit update keeps the coefficient of the
  // old value nonnegative for both species at every point.
  std::vector<double> loss0(n, 0.0), lossp(n, 0.0);
  for (const auto& e : diff_edges_) {
    loss0[e.i] += e.coef;
    loss0[e.j] += e.coef;
  }
  for (const auto& e : adv_edges_) lossp[e.i] += e.coef;
  for (const auto& e : outflow_) lossp[e.i] += e.coef;
  double bound = std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < n; ++i) {
    const double l0 = loss0[i] + vol_[i] * kp_[i];
    const double lp = lossp[i] + vol_[i] * kpp_[i];
    if (l0 > 0.0) bound = std::min(bound, vol_[i] / l0);
    if (lp > 0.0) bound = std::min(bound, vol_[i] / lp);
  }
  stable_dt_ = 0.9 * bound;

  double vtot = 0.0;
  for (int64_t i = 0; i < n; ++i) vtot += vol_[i];
  mass_scale_ = std::max(vtot * std::max(bc.n_in * (1.0 + bc.lambda_in), std::abs(bc.n_out)),
                         1e-12);

  n0_.assign(n, 0.0);
  np_.assign(n, 0.0);
  d0_.assign(n, 0.0);
  dp_.assign(n, 0.0);
  reset();
}

void TransportSimulator::reset() {
  std::fill(n0_.begin(), n0_.end(), 0.0);
  std::fill(np_.begin(), np_.end(), 0.0);
  for (int32_t i : dirichlet_n0_) n0_[i] = is_inlet_point_[i] ? bc_n0_in_ : bc_n0_out_;
  for (int32_t i : dirichlet_np_) np_[i] = bc_np_in_;
  time_ = 0.0;
  max_update_ = std::numeric_limits<double>::infinity();
  budget_residual_ = 0.0;
}

double TransportSimulator::mass() const {
  double m = 0.0;
  for (size_t i = 0; i < vol_.size(); ++i) m += vol_[i] * (n0_[i] + np_[i]);
  return m;
}

void TransportSimulator::step(double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::validation, "dt must be positive");
  if (dt > stable_dt_ * (1.0 + 1e-12))
    fail(ErrorCode::validation,
         "dt " + std::to_string(dt) + " exceeds the stable explicit bound " +
             std::to_string(stable_dt_));

  const int64_t n = static_cast<int64_t>(vol_.size());
  const double mass_before = mass();
  std::fill(d0_.begin(), d0_.end(), 0.0);
  std::fill(dp_.begin(), dp_.end(), 0.0);

  // Mass rates. Interior exchanges appear with opposite signs at both ends.
  for (const auto& e : diff_edges_) {
    const double f = e.coef * (n0_[e.i] - n0_[e.j]);
    d0_[e.i] -= f;
    d0_[e.j] += f;
  }
  for (const auto& e : adv_edges_) {
    const double f = e.coef * np_[e.i];
    dp_[e.i] -= f;
    dp_[e.j] += f;
  }
  double outflow_rate = 0.0;
  for (const auto& e : outflow_) {
    const double f = e.coef * np_[e.i];
    dp_[e.i] -= f;
    outflow_rate += f;
  }
  for (int64_t i = 0; i < n; ++i) {
    const double r = vol_[i] * (kp_[i] * n0_[i] - kpp_[i] * np_[i]);
    d0_[i] -= r;
    dp_[i] += r;
  }

  double max_update = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double dn0 = dt * d0_[i] / vol_[i];
    const double dnp = dt * dp_[i] / vol_[i];
    n0_[i] += dn0;
    np_[i] += dnp;
    max_update = std::max(max_update, std::max(std::abs(dn0), std::abs(dnp)));
  }

  double injected = 0.0;
  for (int32_t i : dirichlet_n0_) {
    const double bc = is_inlet_point_[i] ? bc_n0_in_ : bc_n0_out_;
    injected += vol_[i] * (bc - n0_[i]);
    max_update = std::max(max_update, std::abs(bc - n0_[i]));
    n0_[i] = bc;
  }
  for (int32_t i : dirichlet_np_) {
    injected += vol_[i] * (bc_np_in_ - np_[i]);
    max_update = std::max(max_update, std::abs(bc_np_in_ - np_[i]));
    np_[i] = bc_np_in_;
  }

  const double mass_after = mass();
  budget_residual_ = std::abs((mass_after - mass_before) - (injected - dt * outflow_rate)) /
                     std::max(mass_scale_, std::abs(mass_after));
  max_update_ = max_update;
  time_ += dt;
}

TransportRun run_transport(TransportSimulator& sim, double dt, double t_end, int64_t save_stride,
                           double steady_tol) {
  if (save_stride < 1) fail(ErrorCode::validation, "save_stride must be at least 1");
  sim.reset();

  TransportRun run;
  auto record = [&] {
    run.times.push_back(sim.time());
    run.n0.push_back(sim.n0());
    run.nplus.push_back(sim.nplus());
  };
  record();

  int64_t k = 0;
  while (sim.time() < t_end - 1e-12) {
    sim.step(dt);
    ++k;
    run.max_budget_residual = std::max(run.max_budget_residual, sim.budget_residual());
    const bool on_stride = (k % save_stride == 0);
    if (sim.max_update() < steady_tol) {
      run.reached_steady = true;
      record();
      break;
    }
    if (on_stride) record();
  }
  if (run.times.back() < sim.time() - 1e-15) record();
  run.steps = k;
  return run;
}

}  // namespace galds
