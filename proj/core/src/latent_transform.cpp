#include "galds/latent_transform.hpp"

#include "galds/error.hpp"

namespace galds {

LatentTransform::LatentTransform(const PsiUConfig& cfg, Rng& rng) : cfg_(cfg) {
  if (cfg.hidden < 1 || cfg.latent < 1)
    fail(ErrorCode::validation, "latent transform dimensions must be positive");
  l0_ = DenseLayer(input_width(), cfg.hidden, Activation::relu, rng);
  l1_ = DenseLayer(cfg.hidden, cfg.hidden, Activation::relu, rng);
  l2_ = DenseLayer(cfg.hidden, cfg.latent, Activation::linear, rng);
  norm_mean_.assign(input_width(), 0.0);
  norm_std_.assign(input_width(), 1.0);
}

Tape::Var LatentTransform::forward(Tape& tape, Tape::Var x) {
  if (x.cols != input_width()) fail(ErrorCode::validation, "latent transform input width mismatch");
  return l2_.forward(tape, l1_.forward(tape, l0_.forward(tape, x)));
}

void LatentTransform::collect(ParamRegistry& reg) {
  reg.add_layer("psi_u.l0", l0_);
  reg.add_layer("psi_u.l1", l1_);
  reg.add_layer("psi_u.l2", l2_);
}

std::vector<double> LatentTransform::build_inputs(const GlobalGraph& g,
                                                  std::span<const double> u1d) const {
  const int64_t c = g.section_count();
  if (static_cast<int64_t>(u1d.size()) != c * 3)
    fail(ErrorCode::validation, "1-D velocity must have 3 components per section");
  const int32_t w = input_width();
  std::vector<double> rows(static_cast<size_t>(c) * w);
  for (int64_t s = 0; s < c; ++s) {
    double* r = rows.data() + s * w;
    r[0] = u1d[s * 3 + 0];
    r[1] = u1d[s * 3 + 1];
    r[2] = u1d[s * 3 + 2];
    if (cfg_.side_features) {
      r[3] = g.plan.frames[s].radius;
      r[4] = g.plan.frames[s].curvature;
    }
  }
  return rows;
}

void LatentTransform::set_norm(std::vector<double> mean, std::vector<double> stdev) {
  if (static_cast<int32_t>(mean.size()) != input_width() ||
      static_cast<int32_t>(stdev.size()) != input_width())
    fail(ErrorCode::validation, "normalization stats must match input width");
  for (double s : stdev)
    if (!(s > 0.0)) fail(ErrorCode::validation, "normalization scale must be positive");
  norm_mean_ = std::move(mean);
  norm_std_ = std::move(stdev);
}

std::vector<double> LatentTransform::normalize(std::span<const double> x) const {
  const int32_t w = input_width();
  std::vector<double> out(x.begin(), x.end());
  for (size_t i = 0; i < out.size(); ++i) {
    const int32_t c = static_cast<int32_t>(i % w);
    out[i] = (out[i] - norm_mean_[c]) / norm_std_[c];
  }
  return out;
}

void LatentTransform::save_norm(BlobContainer& c) const {
  c.put("psi_u.norm.mean", {input_width()}, norm_mean_);
  c.put("psi_u.norm.std", {input_width()}, norm_std_);
}

void LatentTransform::load_norm(const BlobContainer& c) {
  set_norm(c.entry("psi_u.norm.mean").data, c.entry("psi_u.norm.std").data);
}

}  // namespace galds
