#pragma once

#include <span>
#include <vector>

#include "galds/trainer.hpp"
#include "galds/transport.hpp"

namespace galds {

// Wall-clock seconds per surrogate stage; every stage is timed around real
// work, so all entries are strictly positive.
struct StepTimings {
  double hydraulics = 0.0;
  double velocity_latent = 0.0;
  double velocity_decode = 0.0;
  double latent_rollout = 0.0;
  double concentration_decode = 0.0;
  double total() const {
    return hydraulics + velocity_latent + velocity_decode + latent_rollout +
           concentration_decode;
  }
};

// Surrogate outputs for one geometry: the steady velocity field plus the
// concentration series on the requested time grid. Velocities are stored in
// section-local components, matching the solver fields.
struct PredictionBundle {
  std::vector<double> times;                // T snapshot times, seconds
  std::vector<double> u1d;                  // C x 3 reduced hydraulic velocity
  std::vector<double> velocity_latent;      // C x velocity latent width
  std::vector<double> velocity;             // total_points x 3
  std::vector<double> n0;                   // T x total_points
  std::vector<double> nplus;                // T x total_points
  std::vector<double> total_concentration;  // T x total_points, n0 + nplus
  StepTimings timings;
};

struct InferenceOptions {
  TransportParams params;         // viscosity and the uniform reaction rates
  ReactionField reaction;         // optional per-point rates; empty = uniform
  double divergence_limit = 1e6;  // latent magnitude guard during the rollout
};

// Four-stage surrogate evaluation: the hydraulic tree solve feeds the reduced
// velocity into the latent transform, the velocity decoder rebuilds the
// pointwise field, the latent dynamics roll the encoded initial concentration
// state across `times`, and the concentration decoders expand every snapshot.
// The transport solver is never called. Callers verify checkpoint gates
// before constructing the ModelSet.
PredictionBundle run_inference(ModelSet& m, const GlobalGraph& g, const GeometryBatches& gb,
                               const TransportBC& bc, std::span<const double> times,
                               const InferenceOptions& opts = {});

// The initial concentration state the rollout starts from: zero everywhere
// except the Dirichlet boundary points. Exposed so evaluations can reuse the
// exact same construction.
void initial_concentration_state(const GlobalGraph& g, const TransportBC& bc,
                                 std::vector<double>& n0, std::vector<double>& nplus);

}  // namespace galds
