#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "galds/dataset.hpp"
#include "galds/trainer.hpp"

namespace galds {

struct InferConfig {
  std::filesystem::path checkpoint;
  std::filesystem::path skeleton;
  std::filesystem::path output_dir;
  double spacing = 0.5;
  double t_end = 300.0;
  double dt = 0.01;
  int64_t save_stride = 400;
  double divergence_limit = 1e6;
  int64_t vtk_stride = 0;  // 0: export the final snapshot only
};

struct EvalConfig {
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::filesystem::path output_dir;
  std::string split = "eval";     // which manifest split to score
  int32_t pattern = -1;           // quadrant mode: restrict to one pattern
  double divergence_limit = 1e6;
  bool write_vtk = false;         // final-snapshot map per sample
};

struct BenchConfig {
  std::filesystem::path checkpoint;
  std::filesystem::path skeleton;
  std::filesystem::path output_dir;
  double spacing = 0.5;
  double t_end = 300.0;
  double dt = 0.01;
  int64_t save_stride = 400;
  int32_t repetitions = 3;
};

// Whole config file: one section per command plus the shared physics
// parameters, boundary condition, model hyperparameters, and gate limits.
// Unknown keys anywhere are rejected with their source line.
struct RunConfig {
  TransportParams params;
  TransportBC bc;
  InferenceGates gates;
  DatasetConfig dataset;  // dataset.params mirrors the shared params
  TrainConfig train;
  InferConfig infer;
  EvalConfig eval;
  BenchConfig bench;
};

RunConfig parse_run_config_text(std::string_view text, const std::string& source);
RunConfig parse_run_config(const std::filesystem::path& path);

// Fully-populated TOML rendering; parsing it back yields an equal config.
std::string echo_run_config(const RunConfig& cfg);

}  // namespace galds
