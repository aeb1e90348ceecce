#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "galds/error.hpp"
#include "galds/global_graph.hpp"
#include "galds/hydraulics.hpp"
#include "galds/skeleton.hpp"
#include "galds/transport.hpp"
#include "galds/velocity_field.hpp"

#include "support.hpp"

using namespace galds;
namespace gt = galds::testing;

namespace {

GlobalGraph pipe_graph(double length = 10.0, double radius = 1.0, double spacing = 0.5) {
  return build_geometry(parse_skeleton(gt::pipe_swc(length, radius), "pipe"), spacing);
}

}  // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("single pipe conserves flux and reproduces the inlet speed") {
  GlobalGraph g = pipe_graph();
  HydraulicSolution h = solve_hydraulics(g, 0.8, 0.1);

  const double q_in = std::numbers::pi * 0.8 * 1.0 * 1.0 / 2.0;
  CHECK(h.inlet_flux == doctest::Approx(q_in));
  for (int32_t s = 0; s < g.c; ++s) {
    CHECK(h.section_flux[static_cast<size_t>(s)] == doctest::Approx(q_in));
    CHECK(h.centerline_speed[static_cast<size_t>(s)] == doctest::Approx(0.8));
  }
  CHECK(max_flux_imbalance(g, h) < 1e-12);

  // Pressure decreases monotonically toward the outlet at zero.
  CHECK(h.pressure.front() > 0.0);
  CHECK(h.pressure.back() == doctest::Approx(0.0));
}

TEST_CASE("symmetric fork splits the flux in half") {
  GlobalGraph g = build_geometry(parse_skeleton(gt::fork_swc(1.0, 1.0), "fork"), 0.5);
  HydraulicSolution h = solve_hydraulics(g, 1.0, 0.1);
  CHECK(max_flux_imbalance(g, h) < 1e-10);

  REQUIRE(g.outlets.size() == 2);
  const double q0 = h.section_flux[static_cast<size_t>(g.outlets[0])];
  const double q1 = h.section_flux[static_cast<size_t>(g.outlets[1])];
  CHECK(q0 == doctest::Approx(q1).epsilon(1e-10));
  CHECK(q0 + q1 == doctest::Approx(h.inlet_flux).epsilon(1e-12));
}

TEST_CASE("radii R and 2^(1/4) R give a 1:2 flux split") {
  const double r = 0.9;
  GlobalGraph g = build_geometry(
      parse_skeleton(gt::fork_swc(r, r * std::pow(2.0, 0.25)), "fork"), 0.5);
  HydraulicSolution h = solve_hydraulics(g, 1.0, 0.1);
  CHECK(max_flux_imbalance(g, h) < 1e-10);

  double q_small = 0.0, q_big = 0.0;
  for (int32_t out : g.outlets) {
    const double q = h.section_flux[static_cast<size_t>(out)];
    if (g.frame(out).radius < r * 1.05)
      q_small = q;
    else
      q_big = q;
  }
  REQUIRE(q_small > 0.0);
  REQUIRE(q_big > 0.0);
  CHECK(q_big / q_small == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("hydraulics rejects nonphysical inputs") {
  GlobalGraph g = pipe_graph();
  CHECK_THROWS_AS(solve_hydraulics(g, -1.0, 0.1), Error);
  CHECK_THROWS_AS(solve_hydraulics(g, 1.0, 0.0), Error);
}

TEST_CASE("velocity reconstruction matches the parabolic profile") {
  GlobalGraph g = pipe_graph();
  HydraulicSolution h = solve_hydraulics(g, 0.8, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);

  REQUIRE(v.local.size() == static_cast<size_t>(g.total_points) * 3);
  REQUIRE(v.u1d.size() == static_cast<size_t>(g.c) * 3);
  for (int32_t s = 0; s < g.c; ++s) {
    const TemplateGraph& t = g.section_template(s);
    const double uc = h.centerline_speed[static_cast<size_t>(s)];
    const double* row = v.local.data() + g.point_offset[static_cast<size_t>(s)] * 3;
    for (int32_t k = 0; k < t.p; ++k) {
      const double rho = t.rho[static_cast<size_t>(k)];
      CHECK(row[k * 3] == doctest::Approx(uc * (1.0 - rho * rho)));
      if (rho == 1.0) {  // no-slip ring
        CHECK(row[k * 3] == 0.0);
        CHECK(row[k * 3 + 1] == 0.0);
      }
      if (rho == 0.5) {  // inner ring axial magnitude
        CHECK(row[k * 3] == doctest::Approx(0.75 * uc));
      }
      CHECK(row[k * 3 + 2] == 0.0);
    }
    CHECK(v.u1d[static_cast<size_t>(s) * 3] == doctest::Approx(uc));
  }
}

TEST_CASE("local frame velocity maps back to world components") {
  GlobalGraph g = gt::y_graph();
  HydraulicSolution h = solve_hydraulics(g, 1.0, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  const CrossSectionFrame& f = g.frame(0);
  const Vec3 w = local_to_world(f, v.local.data());  // center point, section 0
  CHECK(norm(w) == doctest::Approx(h.centerline_speed[0]));
  CHECK(dot(normalized(w), f.tangent) == doctest::Approx(1.0));
}

TEST_CASE("zero boundary data keeps the trajectory identically zero") {
  GlobalGraph g = pipe_graph(8.0, 0.9);
  HydraulicSolution h = solve_hydraulics(g, 0.5, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportParams params;
  TransportBC bc;
  bc.u_t = 0.5;
  bc.n_in = 0.0;
  bc.n_out = 0.0;
  TransportSimulator sim(g, v, h, params, bc);
  for (int i = 0; i < 50; ++i) sim.step(sim.stable_dt());
  for (double x : sim.n0()) CHECK(x == 0.0);
  for (double x : sim.nplus()) CHECK(x == 0.0);
}

TEST_CASE("uniform equilibrium state n+/n0 = 2 is stationary") {
  GlobalGraph g = gt::y_graph();
  HydraulicSolution h = solve_hydraulics(g, 0.1, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportParams params;  // k+ = 1, k'+ = 0.5
  TransportBC bc;
  bc.u_t = 0.1;
  bc.n_in = 1.0;
  bc.n_out = 1.0;
  bc.lambda_in = 2.0;  // carried inlet value = 2 = (k+/k'+) n0
  TransportSimulator sim(g, v, h, params, bc);
  std::fill(sim.n0().begin(), sim.n0().end(), 1.0);
  std::fill(sim.nplus().begin(), sim.nplus().end(), 2.0);
  for (int i = 0; i < 200; ++i) {
    sim.step(sim.stable_dt());
    CHECK(sim.max_update() < 1e-8);
  }
  for (double x : sim.nplus()) CHECK(x == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("mass budget closes to round-off on every step") {
  GlobalGraph g = gt::y_graph();
  HydraulicSolution h = solve_hydraulics(g, 1.2, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportParams params;
  TransportBC bc;
  bc.u_t = 1.2;
  TransportSimulator sim(g, v, h, params, bc);
  const double dt = sim.stable_dt();
  for (int i = 0; i < 1000; ++i) {
    sim.step(dt);
    CHECK(sim.budget_residual() < 1e-6);
  }
  CHECK(sim.mass() > 0.0);
}

TEST_CASE("concentrations stay nonnegative and inlet values hold exactly") {
  GlobalGraph g = gt::y_graph();
  HydraulicSolution h = solve_hydraulics(g, 1.5, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportParams params;
  TransportBC bc;
  bc.u_t = 1.5;
  bc.n_in = 2.0;
  bc.lambda_in = 0.7;
  TransportSimulator sim(g, v, h, params, bc);
  const double dt = sim.stable_dt();
  for (int i = 0; i < 500; ++i) {
    sim.step(dt);
    for (double x : sim.n0()) CHECK(x >= 0.0);
    for (double x : sim.nplus()) CHECK(x >= 0.0);
  }
  // Inlet template points pinned to the Dirichlet data.
  const int32_t inlet = g.inlets[0];
  const int32_t base = g.point_offset[static_cast<size_t>(inlet)];
  CHECK(sim.n0()[static_cast<size_t>(base)] == 2.0);
  CHECK(sim.nplus()[static_cast<size_t>(base)] == doctest::Approx(1.4));
}

TEST_CASE("steps beyond the stability bound are rejected") {
  GlobalGraph g = pipe_graph();
  HydraulicSolution h = solve_hydraulics(g, 1.0, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportSimulator sim(g, v, h, {}, {});
  CHECK_THROWS_AS(sim.step(sim.stable_dt() * 1.5), Error);
  CHECK_THROWS_AS(sim.step(0.0), Error);
}

TEST_CASE("run_transport records snapshots and reaches steady state") {
  GlobalGraph g = pipe_graph(6.0, 0.8);
  HydraulicSolution h = solve_hydraulics(g, 1.0, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportParams params;
  TransportBC bc;
  bc.u_t = 1.0;
  TransportSimulator sim(g, v, h, params, bc);
  TransportRun run = run_transport(sim, sim.stable_dt(), 500.0, 200);

  REQUIRE(run.times.size() >= 3);
  CHECK(run.times.front() == 0.0);
  CHECK(std::is_sorted(run.times.begin(), run.times.end()));
  CHECK(run.n0.size() == run.times.size());
  CHECK(run.nplus.size() == run.times.size());
  CHECK(run.reached_steady);
  CHECK(run.max_budget_residual < 1e-6);

  // At steady state the carried species approaches (k+/k'+) n0 away from
  // the boundaries.
  const std::vector<double>& n0 = run.n0.back();
  const std::vector<double>& np = run.nplus.back();
  const int32_t mid = g.c / 2;
  const int32_t center = g.point_offset[static_cast<size_t>(mid)];
  CHECK(np[static_cast<size_t>(center)] / n0[static_cast<size_t>(center)] ==
        doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("grid refinement shifts the steady centerline profile by under 2%") {
  const double length = 8.0, radius = 0.9, u_t = 1.0;
  TransportParams params;
  TransportBC bc;
  bc.u_t = u_t;

  struct Profile {
    std::vector<double> arc, value;
  };
  const auto steady_profile = [&](double spacing) {
    GlobalGraph g = pipe_graph(length, radius, spacing);
    HydraulicSolution h = solve_hydraulics(g, u_t, 0.1);
    VelocityField v = reconstruct_velocity(g, h, 0.0);
    TransportSimulator sim(g, v, h, params, bc);
    TransportRun run = run_transport(sim, sim.stable_dt(), 2000.0, 100000);
    Profile p;
    for (int32_t s = 0; s < g.c; ++s) {
      p.arc.push_back(g.arc[static_cast<size_t>(s)]);
      const int32_t center = g.point_offset[static_cast<size_t>(s)];
      p.value.push_back(run.n0.back()[static_cast<size_t>(center)] +
                        run.nplus.back()[static_cast<size_t>(center)]);
    }
    return p;
  };

  const Profile coarse = steady_profile(0.5);
  const Profile fine = steady_profile(0.25);

  // Sample the fine profile at the coarse arc positions.
  std::vector<double> fine_at_coarse;
  for (double a : coarse.arc) {
    size_t j = 1;
    while (j + 1 < fine.arc.size() && fine.arc[j] < a) ++j;
    const double t = (a - fine.arc[j - 1]) / (fine.arc[j] - fine.arc[j - 1]);
    fine_at_coarse.push_back(fine.value[j - 1] + t * (fine.value[j] - fine.value[j - 1]));
  }

  double sq = 0.0;
  const auto [lo, hi] = std::minmax_element(fine_at_coarse.begin(), fine_at_coarse.end());
  for (size_t i = 0; i < coarse.value.size(); ++i) {
    const double d = coarse.value[i] - fine_at_coarse[i];
    sq += d * d;
  }
  const double mre = 100.0 * std::sqrt(sq) / (*hi - *lo);
  CHECK(mre < 2.0);
}

TEST_CASE("per-point reaction fields steer the local equilibrium") {
  GlobalGraph g = pipe_graph(6.0, 0.9);
  HydraulicSolution h = solve_hydraulics(g, 1.0, 0.1);
  VelocityField v = reconstruct_velocity(g, h, 0.1);
  TransportParams params;
  TransportBC bc;
  bc.u_t = 1.0;

  ReactionField rf;
  rf.k_plus.assign(static_cast<size_t>(g.total_points), 1.0);
  rf.k_plus_prime.assign(static_cast<size_t>(g.total_points), 0.5);
  // Faster attachment in the downstream half.
  for (int32_t s = g.c / 2; s < g.c; ++s)
    for (int32_t k = 0; k < g.section_points(s); ++k)
      rf.k_plus[static_cast<size_t>(g.point_offset[static_cast<size_t>(s)] + k)] = 2.0;

  TransportSimulator uniform(g, v, h, params, bc);
  TransportSimulator patterned(g, v, h, params, bc, rf);
  TransportRun ru = run_transport(uniform, uniform.stable_dt(), 800.0, 100000);
  TransportRun rp = run_transport(patterned, patterned.stable_dt(), 800.0, 100000);

  const int32_t probe =
      g.point_offset[static_cast<size_t>(3 * g.c / 4)];  // downstream section center
  const double ratio_u = ru.nplus.back()[static_cast<size_t>(probe)] /
                         ru.n0.back()[static_cast<size_t>(probe)];
  const double ratio_p = rp.nplus.back()[static_cast<size_t>(probe)] /
                         rp.n0.back()[static_cast<size_t>(probe)];
  CHECK(ratio_p > ratio_u * 1.5);
}

TEST_SUITE_END();
