#include "galds/latent_dynamics.hpp"

#include <cstring>

#include "galds/error.hpp"

namespace galds {

LatentDynamics::LatentDynamics(std::string prefix, const PsiZConfig& cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
  if (cfg.layers < 1 || cfg.hidden < 1 || cfg.latent < 1)
    fail(ErrorCode::validation, "latent dynamics dimensions must be positive");
  gc_.emplace_back(cfg.feature_width(), cfg.hidden, cfg.act, rng);
  for (int32_t i = 1; i < cfg.layers; ++i) gc_.emplace_back(cfg.hidden, cfg.hidden, cfg.act, rng);
  head_ = DenseLayer(cfg.hidden, cfg.latent, Activation::linear, rng);
}

Tape::Var LatentDynamics::rhs(Tape& tape, Tape::Var z, Tape::Var stat, Tape::Var t,
                              Tape::Var extra, const CsrMatrix& a_hat) {
  std::vector<Tape::Var> parts = {z, stat, t};
  if (cfg_.extra_width() > 0) {
    if (!extra.valid()) fail(ErrorCode::validation, "latent dynamics expects extra features");
    parts.push_back(extra);
  }
  Tape::Var h = tape.concat_cols(parts);
  if (h.cols != cfg_.feature_width())
    fail(ErrorCode::validation, "latent dynamics feature width mismatch");
  for (GconvLayer& layer : gc_) h = layer.forward_sparse(tape, h, a_hat);
  return head_.forward(tape, h);
}

Tape::Var LatentDynamics::time_column(Tape& tape, const std::vector<double>& t, int32_t c,
                                      int32_t cols) {
  std::vector<double> col(t.size() * static_cast<size_t>(c) * cols);
  size_t at = 0;
  for (double v : t)
    for (int32_t i = 0; i < c * cols; ++i) col[at++] = v;
  return tape.constant(static_cast<int32_t>(t.size()) * c, cols, col);
}

Tape::Var LatentDynamics::step(Tape& tape, Tape::Var z, Tape::Var stat, Tape::Var extra,
                               const std::vector<double>& t_norm,
                               const std::vector<double>& dt_norm, int32_t c,
                               const CsrMatrix& a_hat, Integrator method) {
  const int32_t b = static_cast<int32_t>(t_norm.size());
  if (dt_norm.size() != t_norm.size())
    fail(ErrorCode::validation, "time and step arrays must match");
  if (z.rows != b * c) fail(ErrorCode::validation, "state rows must equal samples * sections");

  auto t_at = [&](double frac) {
    std::vector<double> t(t_norm);
    for (size_t i = 0; i < t.size(); ++i) t[i] += frac * dt_norm[i];
    return time_column(tape, t, c, 1);
  };
  Tape::Var dt_col = time_column(tape, dt_norm, c, z.cols);

  switch (method) {
    case Integrator::euler: {
      Tape::Var k1 = rhs(tape, z, stat, t_at(0.0), extra, a_hat);
      return tape.add(z, tape.mul(dt_col, k1));
    }
    case Integrator::midpoint: {
      Tape::Var k1 = rhs(tape, z, stat, t_at(0.0), extra, a_hat);
      Tape::Var zm = tape.add(z, tape.scale(tape.mul(dt_col, k1), 0.5));
      Tape::Var k2 = rhs(tape, zm, stat, t_at(0.5), extra, a_hat);
      return tape.add(z, tape.mul(dt_col, k2));
    }
    case Integrator::rk4: {
      Tape::Var t0 = t_at(0.0), th = t_at(0.5), t1 = t_at(1.0);
      Tape::Var k1 = rhs(tape, z, stat, t0, extra, a_hat);
      Tape::Var k2 =
          rhs(tape, tape.add(z, tape.scale(tape.mul(dt_col, k1), 0.5)), stat, th, extra, a_hat);
      Tape::Var k3 =
          rhs(tape, tape.add(z, tape.scale(tape.mul(dt_col, k2), 0.5)), stat, th, extra, a_hat);
      Tape::Var k4 = rhs(tape, tape.add(z, tape.mul(dt_col, k3)), stat, t1, extra, a_hat);
      Tape::Var sum = tape.add(tape.add(k1, k4), tape.scale(tape.add(k2, k3), 2.0));
      return tape.add(z, tape.scale(tape.mul(dt_col, sum), 1.0 / 6.0));
    }
  }
  fail(ErrorCode::validation, "unknown integrator");
}

void LatentDynamics::collect(ParamRegistry& reg) {
  for (size_t i = 0; i < gc_.size(); ++i)
    reg.add_layer(prefix_ + ".g" + std::to_string(i), gc_[i]);
  reg.add_layer(prefix_ + ".head", head_);
}

void LatentDynamics::adopt_widened(const LatentDynamics& base) {
  if (cfg_.extra_width() <= base.cfg_.extra_width())
    fail(ErrorCode::validation, "widening expects a model with more extra features");
  if (base.cfg_.extra_width() != 0)
    fail(ErrorCode::validation, "widening starts from a model without extras");
  if (cfg_.hidden != base.cfg_.hidden || cfg_.layers != base.cfg_.layers ||
      cfg_.latent != base.cfg_.latent || cfg_.velocity_latent != base.cfg_.velocity_latent ||
      cfg_.act != base.cfg_.act)
    fail(ErrorCode::validation, "widening requires matching dimensions");

  // Extra columns trail the feature block, so base rows keep their positions
  // and the new rows start at zero: the widened model reproduces the base.
  const int32_t base_w = base.cfg_.feature_width();
  const int32_t hidden = cfg_.hidden;
  std::fill(gc_[0].w.values().begin(), gc_[0].w.values().end(), 0.0);
  std::memcpy(gc_[0].w.values().data(), base.gc_[0].w.values().data(),
              sizeof(double) * static_cast<size_t>(base_w) * hidden);
  gc_[0].b.values() = base.gc_[0].b.values();
  for (size_t i = 1; i < gc_.size(); ++i) {
    gc_[i].w.values() = base.gc_[i].w.values();
    gc_[i].b.values() = base.gc_[i].b.values();
  }
  head_.w.values() = base.head_.w.values();
  head_.b.values() = base.head_.b.values();
}

}  // namespace galds
