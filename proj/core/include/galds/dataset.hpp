#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "galds/global_graph.hpp"
#include "galds/transport.hpp"

namespace galds {

// One simulated trajectory on one geometry: the steady velocity field plus
// concentration snapshots. Vector quantities are stored in section-local
// components.
struct FieldSeries {
  std::string geometry_id;
  std::string skeleton;          // path as recorded by the generator
  double spacing = 0.0;
  TransportParams params;
  TransportBC bc;
  double perturbation_scale = 0.0;
  bool reached_steady = false;
  int32_t pattern = -1;          // quadrant pattern index, -1 = uniform rates
  std::vector<double> times;     // T
  std::vector<double> u1d;       // C x 3
  std::vector<double> velocity;  // N x 3
  std::vector<double> n0;        // T x N row-major
  std::vector<double> nplus;     // T x N
  std::vector<double> k_plus;        // N
  std::vector<double> k_plus_prime;  // N

  int64_t snapshots() const { return static_cast<int64_t>(times.size()); }
  int64_t points() const { return static_cast<int64_t>(velocity.size()) / 3; }
  int64_t sections() const { return static_cast<int64_t>(u1d.size()) / 3; }
};

void save_field_series(const std::filesystem::path& path, const FieldSeries& fs);
FieldSeries load_field_series(const std::filesystem::path& path);

struct GeometryJob {
  std::string id;
  std::filesystem::path skeleton;
  std::string split;  // "train" or "eval"
};

struct DatasetConfig {
  std::filesystem::path output_dir;
  std::vector<GeometryJob> geometries;
  double spacing = 0.5;
  TransportParams params;
  int32_t train_samples = 6;  // boundary-condition draws per train geometry
  int32_t eval_samples = 2;
  double u_t_min = 0.6, u_t_max = 1.8;
  double n_in_min = 0.8, n_in_max = 2.0;
  double n_out_frac_min = 0.0, n_out_frac_max = 0.25;  // n_out as a fraction of n_in
  double lambda_min = 0.6, lambda_max = 1.6;
  double dt = 0.01;
  double t_end = 300.0;
  int64_t save_stride = 400;
  double steady_tol = 1e-8;
  double perturbation_scale = 0.1;
  uint64_t seed = 1;
  int32_t workers = 1;
  // Quadrant-patterned reaction mode: every geometry runs all six k+ layouts
  // under one shared boundary condition; the last layout is held out.
  bool quadrant_mode = false;
  double k_high = 2.0, k_low = 0.3;
  double patterned_arc_min = 0.3, patterned_arc_max = 0.7;
};

struct SampleRecord {
  std::string file;  // relative to the manifest directory
  std::string geometry_id;
  std::string skeleton;
  std::string split;
  int32_t pattern = -1;
  TransportBC bc;
};

struct DatasetManifest {
  std::filesystem::path root;  // directory holding manifest.json
  double spacing = 0.0;
  TransportParams params;
  double perturbation_scale = 0.0;
  bool quadrant_mode = false;
  std::vector<SampleRecord> samples;

  std::filesystem::path sample_path(const SampleRecord& s) const { return root / s.file; }
};

// Runs every (geometry, boundary-condition | pattern) job, writes one series
// file per job plus manifest.json under output_dir.
DatasetManifest generate_dataset(const DatasetConfig& cfg);

DatasetManifest load_manifest(const std::filesystem::path& path);

// The four quadrant-pattern rate layouts used by the patterned mode, index 0
// to 5; values are high/low flags per angular quadrant.
std::array<std::array<bool, 4>, 6> quadrant_patterns();

// Per-point k+ field: sections whose arc fraction lies in [arc_min, arc_max]
// get the quadrant-dependent rate, everything else the normal rate.
std::vector<double> quadrant_k_field(const GlobalGraph& g, const std::array<bool, 4>& high,
                                     double k_high, double k_low, double k_normal,
                                     double arc_min, double arc_max);

}  // namespace galds
