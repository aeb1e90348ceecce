#include <benchmark/benchmark.h>

#include "galds/autoencoder.hpp"
#include "galds/latent_dynamics.hpp"
#include "galds/rng.hpp"
#include "galds/skeleton.hpp"
#include "galds/tape.hpp"
#include "galds/templates.hpp"
#include "galds/transport.hpp"

namespace {

using namespace galds;

// Small two-branch tree, enough to exercise every code path.
constexpr const char* kYTree = R"(# synthetic y tree
1 1 0 0 0 1.4 -1
2 1 8 0 0 1.35 1
3 1 16 0 0 1.3 2
4 1 24 0 0 1.25 3
5 1 31 5 0 1.1 4
6 1 38 10 0 1.05 5
7 1 45 15 0 1.0 6
8 1 31 -5 0 1.1 4
9 1 38 -10 0 1.05 8
10 1 45 -15 0 1.0 9
)";

const GlobalGraph& y_graph() {
  static const GlobalGraph g = build_geometry(parse_skeleton(kYTree, "bench"), 0.5);
  return g;
}

void bm_tape_matmul(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng(7);
  Tensor a = glorot_uniform(n, n, rng);
  Tensor b = glorot_uniform(n, n, rng);
  a.set_requires_grad(true);
  b.set_requires_grad(true);
  Tape tape;
  for (auto _ : state) {
    tape.reset();
    a.zero_grad();
    b.zero_grad();
    Tape::Var y = tape.matmul(tape.leaf(a), tape.leaf(b));
    Tape::Var loss = tape.sse(y, tape.constant(1, 1, std::vector<double>(1, 0.0)));
    tape.backward(loss);
    benchmark::DoNotOptimize(b.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(bm_tape_matmul)->Arg(64)->Arg(128);

void bm_gconv_batch(benchmark::State& state) {
  const int32_t sections = static_cast<int32_t>(state.range(0));
  const TemplateGraph& tpl = pipe_template();
  Rng rng(11);
  GconvLayer layer(8, 8, Activation::relu, rng);
  Tensor x = glorot_uniform(int64_t{sections} * tpl.p, 8, rng);
  Tape tape;
  for (auto _ : state) {
    tape.reset();
    Tape::Var h = tape.constant(sections * tpl.p, 8, x.values());
    Tape::Var y = layer.forward_dense(tape, h, tpl.a_hat, tpl.p);
    benchmark::DoNotOptimize(tape.value(y).data());
  }
  state.SetItemsProcessed(state.iterations() * sections * tpl.p);
}
BENCHMARK(bm_gconv_batch)->Arg(64)->Arg(256);

void bm_transport_step(benchmark::State& state) {
  const GlobalGraph& g = y_graph();
  const TransportBC bc;
  const TransportParams params;
  const HydraulicSolution hyd = solve_hydraulics(g, bc.u_t, params.viscosity);
  const VelocityField vel = reconstruct_velocity(g, hyd, 0.0);
  TransportSimulator sim(g, vel, hyd, params, bc);
  sim.reset();
  const double dt = sim.stable_dt();
  for (auto _ : state) {
    sim.step(dt);
    benchmark::DoNotOptimize(sim.n0().data());
  }
  state.SetItemsProcessed(state.iterations() * g.total_points);
}
BENCHMARK(bm_transport_step);

void bm_dynamics_step(benchmark::State& state) {
  const GlobalGraph& g = y_graph();
  const int32_t c = g.section_count();
  PsiZConfig cfg;
  Rng rng(13);
  LatentDynamics dyn("psi_z.bench", cfg, rng);
  Rng data(17);
  std::vector<double> z(size_t(c) * cfg.latent), stat(size_t(c) * (cfg.velocity_latent + 1));
  for (double& v : z) v = data.uniform(-1.0, 1.0);
  for (double& v : stat) v = data.uniform(-1.0, 1.0);
  const std::vector<double> tn = {0.1}, dtn = {0.01};
  Tape tape;
  for (auto _ : state) {
    tape.reset();
    Tape::Var zv = tape.constant(c, cfg.latent, z);
    Tape::Var sv = tape.constant(c, cfg.velocity_latent + 1, stat);
    Tape::Var out = dyn.step(tape, zv, sv, Tape::Var{}, tn, dtn, c, g.a_hat, Integrator::rk4);
    benchmark::DoNotOptimize(tape.value(out).data());
  }
  state.SetItemsProcessed(state.iterations() * c);
}
BENCHMARK(bm_dynamics_step);

}  // namespace

BENCHMARK_MAIN();
