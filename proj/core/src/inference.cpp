#include "galds/inference.hpp"

#include <chrono>
#include <cmath>

#include "galds/error.hpp"

namespace galds {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point& mark) {
  const Clock::time_point now = Clock::now();
  const double s = std::chrono::duration<double>(now - mark).count();
  mark = now;
  return s;
}

// Chained one-step integrations over the snapshot grid. The state is read
// back after every step so the divergence guard sees exactly what the next
// step consumes.
std::vector<double> rollout(LatentDynamics& dyn, const GlobalGraph& g,
                            std::span<const double> z_init, const std::vector<double>& stat,
                            const std::vector<double>& extra, std::span<const double> times,
                            double time_scale, Integrator method, double limit) {
  const int32_t c = g.section_count();
  const int64_t lat = dyn.config().latent;
  const int32_t ew = dyn.config().extra_width();
  const int64_t t_count = std::ssize(times);
  std::vector<double> series(t_count * c * lat);
  std::vector<double> cur(z_init.begin(), z_init.end());
  std::copy(cur.begin(), cur.end(), series.begin());
  Tape tape;
  for (int64_t k = 0; k + 1 < t_count; ++k) {
    tape.reset();
    Tape::Var zv = tape.constant(c, lat, cur);
    Tape::Var sv = tape.constant(c, int64_t{dyn.config().velocity_latent} + 1, stat);
    Tape::Var ev;
    if (ew > 0) ev = tape.constant(c, ew, extra);
    const std::vector<double> tn = {times[k] / time_scale};
    const std::vector<double> dtn = {(times[k + 1] - times[k]) / time_scale};
    Tape::Var out = dyn.step(tape, zv, sv, ev, tn, dtn, c, g.a_hat, method);
    std::span<const double> v = tape.value(out);
    cur.assign(v.begin(), v.end());
    for (double x : cur)
      if (!std::isfinite(x) || std::abs(x) > limit)
        fail(ErrorCode::numeric, "latent rollout diverged");
    std::copy(cur.begin(), cur.end(), series.begin() + (k + 1) * c * lat);
  }
  return series;
}

}  // namespace

void initial_concentration_state(const GlobalGraph& g, const TransportBC& bc,
                                 std::vector<double>& n0, std::vector<double>& nplus) {
  n0.assign(g.total_points, 0.0);
  nplus.assign(g.total_points, 0.0);
  for (int32_t in : g.inlets) {
    const TemplateGraph& tpl = g.section_template(in);
    for (int32_t k = 0; k < tpl.p; ++k) {
      n0[g.point_offset[in] + k] = bc.n_in;
      nplus[g.point_offset[in] + k] = bc.lambda_in * bc.n_in;
    }
  }
  for (int32_t o : g.outlets) {
    const TemplateGraph& tpl = g.section_template(o);
    for (int32_t k = 0; k < tpl.p; ++k) n0[g.point_offset[o] + k] = bc.n_out;
  }
}

PredictionBundle run_inference(ModelSet& m, const GlobalGraph& g, const GeometryBatches& gb,
                               const TransportBC& bc, std::span<const double> times,
                               const InferenceOptions& opts) {
  if (times.empty()) fail(ErrorCode::validation, "inference needs at least one snapshot time");
  for (size_t k = 0; k + 1 < times.size(); ++k)
    if (!(times[k] < times[k + 1]))
      fail(ErrorCode::validation, "snapshot times must be strictly increasing");
  const int32_t c = g.section_count();
  const int64_t n = g.total_points;
  const int64_t t_count = std::ssize(times);
  const int32_t vl = m.cfg.velocity_latent;
  const int64_t sl = m.cfg.species_latent;

  PredictionBundle out;
  out.times.assign(times.begin(), times.end());
  Clock::time_point mark = Clock::now();

  // Reduced hydraulics: the only physics solve on this path.
  const HydraulicSolution hyd = solve_hydraulics(g, bc.u_t, opts.params.viscosity);
  out.u1d.assign(int64_t{c} * 3, 0.0);
  for (int32_t s = 0; s < c; ++s) out.u1d[int64_t{s} * 3] = hyd.centerline_speed[s];
  out.timings.hydraulics = seconds_since(mark);

  // Velocity latent from the reduced velocity.
  {
    const std::vector<double> raw = m.psi_u.build_inputs(g, out.u1d);
    const std::vector<double> xin = m.psi_u.normalize(raw);
    Tape tape;
    Tape::Var y = m.psi_u.forward(tape, tape.constant(c, m.psi_u.input_width(), xin));
    std::span<const double> v = tape.value(y);
    out.velocity_latent.assign(v.begin(), v.end());
  }
  out.timings.velocity_latent = seconds_since(mark);

  // Pointwise velocity through the section decoders.
  out.velocity = decode_field_sections(m.ae_u, gb, n, out.velocity_latent);
  out.timings.velocity_decode = seconds_since(mark);

  // Latent concentration rollout from the encoded initial state.
  std::vector<double> stat(int64_t{c} * (vl + 1));
  for (int32_t s = 0; s < c; ++s) {
    std::copy_n(out.velocity_latent.begin() + int64_t{s} * vl, vl,
                stat.begin() + int64_t{s} * (vl + 1));
    stat[int64_t{s} * (vl + 1) + vl] = g.c_feature[s];
  }

  std::vector<double> init_n0, init_np;
  initial_concentration_state(g, bc, init_n0, init_np);
  const std::vector<double> z0_n0 = encode_field_sections(m.ae_n0, gb, c, init_n0);
  const std::vector<double> z0_np = encode_field_sections(m.ae_np, gb, c, init_np);

  std::vector<double> zk, zkp;
  if (m.cfg.reaction_features) {
    std::vector<double> kp(opts.reaction.k_plus);
    std::vector<double> kpp(opts.reaction.k_plus_prime);
    if (kp.empty()) kp.assign(n, opts.params.k_plus);
    if (kpp.empty()) kpp.assign(n, opts.params.k_plus_prime);
    if (std::ssize(kp) != n || std::ssize(kpp) != n)
      fail(ErrorCode::validation, "reaction field size does not match the point count");
    zk = encode_field_sections(m.ae_k, gb, c, kp);
    zkp = encode_field_sections(m.ae_k, gb, c, kpp);
  }
  auto extra_rows = [&](const std::vector<double>& z0) {
    const int32_t ew = m.cfg.psi_z_config().extra_width();
    std::vector<double> rows(int64_t{c} * ew);
    const int64_t kl = m.cfg.reaction_features ? std::ssize(zk) / c : 0;
    for (int32_t s = 0; s < c; ++s) {
      double* r = rows.data() + int64_t{s} * ew;
      if (m.cfg.reaction_features) {
        std::copy_n(zk.begin() + int64_t{s} * kl, kl, r);
        std::copy_n(zkp.begin() + int64_t{s} * kl, kl, r + kl);
        r += 2 * kl;
      }
      if (m.cfg.feed_initial) std::copy_n(z0.begin() + int64_t{s} * sl, sl, r);
    }
    return rows;
  };

  const std::vector<double> series_n0 =
      rollout(m.psi_n0, g, z0_n0, stat, extra_rows(z0_n0), times, m.cfg.time_scale,
              m.cfg.integrator, opts.divergence_limit);
  const std::vector<double> series_np =
      rollout(m.psi_np, g, z0_np, stat, extra_rows(z0_np), times, m.cfg.time_scale,
              m.cfg.integrator, opts.divergence_limit);
  out.timings.latent_rollout = seconds_since(mark);

  // Decode every snapshot for both species.
  out.n0.resize(t_count * n);
  out.nplus.resize(t_count * n);
  out.total_concentration.resize(t_count * n);
  for (int64_t t = 0; t < t_count; ++t) {
    const std::vector<double> f0 = decode_field_sections(
        m.ae_n0, gb, n, std::span<const double>(series_n0).subspan(t * c * sl, int64_t{c} * sl));
    const std::vector<double> fp = decode_field_sections(
        m.ae_np, gb, n, std::span<const double>(series_np).subspan(t * c * sl, int64_t{c} * sl));
    std::copy(f0.begin(), f0.end(), out.n0.begin() + t * n);
    std::copy(fp.begin(), fp.end(), out.nplus.begin() + t * n);
    for (int64_t i = 0; i < n; ++i)
      out.total_concentration[t * n + i] = f0[i] + fp[i];
  }
  out.timings.concentration_decode = seconds_since(mark);
  return out;
}

}  // namespace galds
