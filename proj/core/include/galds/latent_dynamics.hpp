#pragma once

#include <string>
#include <vector>

#include "galds/integrators.hpp"
#include "galds/nn_layers.hpp"

namespace galds {

struct PsiZConfig {
  int32_t latent = 1;          // species latent width
  int32_t velocity_latent = 3;
  int32_t hidden = 16;
  int32_t layers = 5;
  Activation act = Activation::softplus;
  bool reaction_features = false;  // append the two reaction-rate latents
  bool feed_initial = false;       // append the initial species latent

  // Fixed feature layout, versioned by these flags:
  // [z | velocity latent | arc | t | k+ latent, k'+ latent | z0].
  int32_t extra_width() const {
    return (reaction_features ? 2 : 0) + (feed_initial ? latent : 0);
  }
  int32_t feature_width() const { return latent + velocity_latent + 1 + 1 + extra_width(); }
};

// Right hand side of the latent evolution for one species: a graph network
// over sections. Time is normalized by the horizon, so the learned rate is
// per unit of normalized time. The base features are the species latent, the
// velocity latent, the arc feature, and t; the optional extras sit after t so
// a widened model can adopt base weights row-for-row.
class LatentDynamics {
 public:
  LatentDynamics(std::string prefix, const PsiZConfig& cfg, Rng& rng);

  const PsiZConfig& config() const { return cfg_; }
  const std::string& prefix() const { return prefix_; }

  // z: (B*C) x latent, stat: (B*C) x (velocity_latent + 1), t: (B*C) x 1,
  // extra: (B*C) x extra_width when the config declares extras.
  Tape::Var rhs(Tape& tape, Tape::Var z, Tape::Var stat, Tape::Var t, Tape::Var extra,
                const CsrMatrix& a_hat);

  // One integrator step for B stacked samples over the same section graph.
  // t_norm and dt_norm hold one value per sample block of C rows.
  Tape::Var step(Tape& tape, Tape::Var z, Tape::Var stat, Tape::Var extra,
                 const std::vector<double>& t_norm, const std::vector<double>& dt_norm,
                 int32_t c, const CsrMatrix& a_hat, Integrator method);

  void collect(ParamRegistry& reg);  // <prefix>.g0..g4 / head

  // Copies weights from a model without extra features, zero-filling the rows
  // that multiply the new trailing input columns.
  void adopt_widened(const LatentDynamics& base);

 private:
  Tape::Var time_column(Tape& tape, const std::vector<double>& t, int32_t c, int32_t cols);

  std::string prefix_;
  PsiZConfig cfg_;
  std::vector<GconvLayer> gc_;
  DenseLayer head_;
};

}  // namespace galds
