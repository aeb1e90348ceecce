#pragma once

#include <vector>

#include "galds/checkpoint.hpp"
#include "galds/global_graph.hpp"
#include "galds/nn_layers.hpp"

namespace galds {

struct PsiUConfig {
  int32_t hidden = 64;
  int32_t latent = 3;        // velocity latent width
  bool side_features = true; // append section radius and curvature
};

// Maps the reduced 1-D velocity of a section (local components, optionally
// with radius and curvature) to the velocity latent of the section encoder.
class LatentTransform {
 public:
  LatentTransform(const PsiUConfig& cfg, Rng& rng);

  const PsiUConfig& config() const { return cfg_; }
  int32_t input_width() const { return cfg_.side_features ? 5 : 3; }

  // x is C x input_width.
  Tape::Var forward(Tape& tape, Tape::Var x);

  void collect(ParamRegistry& reg);  // psi_u.l0 / l1 / l2

  // Input rows from a geometry and its 1-D velocity (C x 3 local components).
  std::vector<double> build_inputs(const GlobalGraph& g, std::span<const double> u1d) const;

  void set_norm(std::vector<double> mean, std::vector<double> stdev);
  const std::vector<double>& norm_mean() const { return norm_mean_; }
  const std::vector<double>& norm_std() const { return norm_std_; }
  std::vector<double> normalize(std::span<const double> x) const;
  void save_norm(BlobContainer& c) const;
  void load_norm(const BlobContainer& c);

 private:
  PsiUConfig cfg_;
  DenseLayer l0_, l1_, l2_;
  std::vector<double> norm_mean_, norm_std_;
};

}  // namespace galds
