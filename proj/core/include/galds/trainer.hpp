#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "galds/autoencoder.hpp"
#include "galds/dataset.hpp"
#include "galds/latent_dynamics.hpp"
#include "galds/latent_transform.hpp"

namespace galds {

struct ModelConfig {
  int32_t hidden = 16;
  int32_t velocity_latent = 3;
  int32_t species_latent = 1;
  int32_t psi_u_hidden = 64;
  bool psi_u_side_features = true;
  int32_t psi_z_hidden = 16;
  int32_t psi_z_layers = 5;
  Activation psi_z_act = Activation::softplus;
  bool reaction_features = false;
  bool feed_initial = false;
  Integrator integrator = Integrator::rk4;
  double time_scale = 300.0;  // seconds; normalizes t in the dynamics features

  PsiUConfig psi_u_config() const;
  PsiZConfig psi_z_config() const;
};

// Every sub-model, constructed with per-model forked seeds so optional parts
// do not shift the initialization of the others.
class ModelSet {
 public:
  ModelSet(const ModelConfig& cfg, uint64_t seed);

  ModelConfig cfg;
  uint64_t seed;
  GraphAutoencoder ae_u;   // ae.u, 3 channels
  GraphAutoencoder ae_n0;  // ae.n0
  GraphAutoencoder ae_np;  // ae.nplus
  GraphAutoencoder ae_k;   // ae.k, shared by the two rate channels
  LatentTransform psi_u;
  LatentDynamics psi_n0;   // psi_z.n0
  LatentDynamics psi_np;   // psi_z.nplus

  ParamRegistry all_params();
  void save_into(Checkpoint& ck);
  static ModelSet from_checkpoint(const Checkpoint& ck);

  // Copies weights and normalization from another set; `other` may lack the
  // reaction features, in which case the dynamics weights are adopted with
  // zero-filled rows for the new columns.
  void adopt(ModelSet& other);
};

struct TrainConfig {
  std::filesystem::path manifest;
  std::filesystem::path out_dir;
  ModelConfig model;
  uint64_t seed = 1;
  double lr = 1e-4;
  int32_t epochs_phase1 = 5000;
  int32_t epochs_phase2 = 5000;
  int32_t epochs_phase3 = 5000;
  int32_t epochs_phase4 = 5000;
  int32_t epochs_joint = 1000;
  int32_t epochs_rollout = 0;       // full-rollout fine-tune, off by default
  int32_t early_stop_window = 200;
  double early_stop_delta = 1e-7;
  double val_fraction = 0.2;        // trailing samples per geometry
  int32_t snapshot_stride = 1;      // concentration AE snapshot subsampling
  int32_t pair_stride = 1;          // dynamics pair subsampling
  int32_t chunk_sections = 1024;    // gradient-accumulation chunk, in sections
  int32_t chunk_pairs = 256;        // same for dynamics pairs
  bool phase1 = true, phase2 = true, phase3 = true, phase4 = true;
  bool rollout_finetune = false;
  bool case2 = false;               // quadrant fine-tune path
  std::filesystem::path base_checkpoint;  // start state for case2 / skipped phases
};

struct PhaseReport {
  std::string name;
  int32_t epochs = 0;
  double train_loss = 0.0;  // final per-element MSE
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<PhaseReport> phases;
  std::filesystem::path final_checkpoint;
  double velocity_ae_mre = 0.0;       // held-out sub-model metrics, percent
  double psi_u_mre = 0.0;
  double concentration_ae_mre = 0.0;
  double joint_val_before = 0.0;      // summed-target loss on held-out data
  double joint_val_after = 0.0;
};

TrainReport train(const TrainConfig& cfg);

// Gate thresholds checked against checkpoint metadata before inference.
struct InferenceGates {
  double velocity_ae_mre = 2.0;
  double psi_u_mre = 2.0;
  double concentration_ae_mre = 2.5;
};

// Fails with ErrorCode::gate naming the offending sub-model.
void verify_gates(const Checkpoint& ck, const InferenceGates& gates);

}  // namespace galds
