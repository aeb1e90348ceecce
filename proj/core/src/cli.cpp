#include "galds/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <span>

#include <nlohmann/json.hpp>

#include "galds/dataset.hpp"
#include "galds/error.hpp"
#include "galds/inference.hpp"
#include "galds/metrics.hpp"
#include "galds/run_config.hpp"
#include "galds/vtk_io.hpp"

namespace galds {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_file(const fs::path& p, const char* what) {
  if (p.empty()) fail(ErrorCode::validation, std::string(what) + " is required in the config");
  if (!fs::exists(p)) fail(ErrorCode::io, std::string(what) + " not found: " + p.string());
}

void require_out_dir(const fs::path& p, const char* what) {
  if (p.empty()) fail(ErrorCode::validation, std::string(what) + " is required in the config");
  fs::create_directories(p);
}

ModelSet load_gated_model(const fs::path& path, const InferenceGates& gates) {
  const Checkpoint ck = load_checkpoint(path);
  verify_gates(ck, gates);
  return ModelSet::from_checkpoint(ck);
}

// Snapshot times on the decimated step grid, always covering t_end.
std::vector<double> snapshot_grid(double dt, double t_end, int64_t stride) {
  if (dt <= 0.0 || t_end <= 0.0 || stride < 1)
    fail(ErrorCode::validation, "snapshot grid needs dt > 0, t_end > 0, save_stride >= 1");
  std::vector<double> times{0.0};
  const double step = dt * static_cast<double>(stride);
  for (int64_t k = 1; static_cast<double>(k) * step <= t_end * (1.0 + 1e-12); ++k)
    times.push_back(static_cast<double>(k) * step);
  if (times.back() < t_end * (1.0 - 1e-12)) times.push_back(t_end);
  return times;
}

struct Geometry {
  GlobalGraph g;
  GeometryBatches gb;
};

Geometry build(const fs::path& skeleton, double spacing) {
  Geometry geo;
  geo.g = build_geometry(load_skeleton(skeleton), spacing);
  geo.gb = make_geometry_batches(geo.g);
  return geo;
}

// The skeleton path recorded in a series file may be relative to the
// manifest directory.
fs::path resolve_skeleton(const std::string& recorded, const fs::path& root) {
  const fs::path p = recorded;
  if (fs::exists(p)) return p;
  const fs::path alt = root / p;
  if (fs::exists(alt)) return alt;
  fail(ErrorCode::io, "skeleton not found: " + recorded);
}

void write_timings_json(const fs::path& path, const StepTimings& t) {
  nlohmann::json doc = {{"hydraulics_seconds", t.hydraulics},
                        {"velocity_latent_seconds", t.velocity_latent},
                        {"velocity_decode_seconds", t.velocity_decode},
                        {"latent_rollout_seconds", t.latent_rollout},
                        {"concentration_decode_seconds", t.concentration_decode},
                        {"total_seconds", t.total()}};
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

FieldSeries bundle_to_series(const PredictionBundle& b, const Geometry& geo,
                             const std::string& id, const std::string& skeleton, double spacing,
                             const TransportParams& params, const TransportBC& bc) {
  FieldSeries out;
  out.geometry_id = id;
  out.skeleton = skeleton;
  out.spacing = spacing;
  out.params = params;
  out.bc = bc;
  out.times = b.times;
  out.u1d = b.u1d;
  out.velocity = b.velocity;
  out.n0 = b.n0;
  out.nplus = b.nplus;
  out.k_plus.assign(geo.g.total_points, params.k_plus);
  out.k_plus_prime.assign(geo.g.total_points, params.k_plus_prime);
  return out;
}

int cmd_gen_data(RunConfig cfg, const CliOverrides& ov) {
  DatasetConfig& d = cfg.dataset;
  if (ov.seed) d.seed = *ov.seed;
  if (ov.workers) d.workers = *ov.workers;
  if (d.geometries.empty())
    fail(ErrorCode::validation, "gen-data needs at least one [[geometry]] entry");
  for (const GeometryJob& g : d.geometries) require_file(g.skeleton, "geometry skeleton");
  require_out_dir(d.output_dir, "dataset.output_dir");
  const Clock::time_point start = Clock::now();
  const DatasetManifest man = generate_dataset(d);
  std::printf("galds-summary command=gen-data samples=%zu manifest=%s seconds=%.2f\n",
              man.samples.size(), (man.root / "manifest.json").string().c_str(), elapsed(start));
  return 0;
}

int cmd_train(RunConfig cfg, const CliOverrides& ov) {
  TrainConfig& t = cfg.train;
  if (ov.seed) t.seed = *ov.seed;
  require_file(t.manifest, "train.manifest");
  require_out_dir(t.out_dir, "train.output_dir");
  {
    std::ofstream echo(t.out_dir / "config_echo.toml");
    if (!echo) fail(ErrorCode::io, "cannot write the config echo");
    echo << echo_run_config(cfg);
  }
  const TrainReport rep = train(t);
  for (const PhaseReport& p : rep.phases)
    std::printf("phase=%s epochs=%d train_mse=%.6e val_mse=%.6e seconds=%.1f\n", p.name.c_str(),
                p.epochs, p.train_loss, p.val_loss, p.seconds);
  std::printf("galds-summary command=train checkpoint=%s velocity_ae_mre=%.4f psi_u_mre=%.4f "
              "concentration_ae_mre=%.4f joint_val_before=%.6e joint_val_after=%.6e\n",
              rep.final_checkpoint.string().c_str(), rep.velocity_ae_mre, rep.psi_u_mre,
              rep.concentration_ae_mre, rep.joint_val_before, rep.joint_val_after);
  return 0;
}

int cmd_infer(RunConfig cfg, const CliOverrides&) {
  const InferConfig& ic = cfg.infer;
  require_file(ic.checkpoint, "infer.checkpoint");
  require_file(ic.skeleton, "infer.skeleton");
  require_out_dir(ic.output_dir, "infer.output_dir");
  ModelSet m = load_gated_model(ic.checkpoint, cfg.gates);
  Geometry geo = build(ic.skeleton, ic.spacing);
  const std::vector<double> times = snapshot_grid(ic.dt, ic.t_end, ic.save_stride);
  InferenceOptions opts;
  opts.params = cfg.params;
  opts.divergence_limit = ic.divergence_limit;
  const PredictionBundle b = run_inference(m, geo.g, geo.gb, cfg.bc, times, opts);

  const std::string id = ic.skeleton.stem().string();
  save_field_series(ic.output_dir / "prediction.series",
                    bundle_to_series(b, geo, id, ic.skeleton.generic_string(), ic.spacing,
                                     cfg.params, cfg.bc));
  write_timings_json(ic.output_dir / "timings.json", b.timings);
  const int64_t t_count = std::ssize(b.times);
  for (int64_t k = 0; k < t_count; ++k) {
    const bool last = k == t_count - 1;
    if (!last && (ic.vtk_stride < 1 || k % ic.vtk_stride != 0)) continue;
    char name[64];
    std::snprintf(name, sizeof(name), "snapshot_%04lld.vtk", static_cast<long long>(k));
    export_snapshot_vtk(ic.output_dir / name, geo.g, b, k);
  }
  std::printf("galds-summary command=infer geometry=%s sections=%d points=%d snapshots=%lld "
              "seconds=%.4f\n",
              id.c_str(), geo.g.section_count(), geo.g.total_points,
              static_cast<long long>(t_count), b.timings.total());
  return 0;
}

struct EvalAccumulator {
  double mre_sum = 0.0, maxre = 0.0;
  int64_t count = 0;
  void add(double mre, double max_re) {
    mre_sum += mre;
    maxre = std::max(maxre, max_re);
    ++count;
  }
  double mean() const { return count ? mre_sum / static_cast<double>(count) : 0.0; }
};

int cmd_eval(RunConfig cfg, const CliOverrides&) {
  const EvalConfig& ec = cfg.eval;
  require_file(ec.checkpoint, "eval.checkpoint");
  require_file(ec.manifest, "eval.manifest");
  require_out_dir(ec.output_dir, "eval.output_dir");
  ModelSet m = load_gated_model(ec.checkpoint, cfg.gates);
  const DatasetManifest man = load_manifest(ec.manifest);

  std::vector<const SampleRecord*> picked;
  for (const SampleRecord& r : man.samples) {
    if (man.quadrant_mode) {
      if (ec.pattern >= 0 && r.pattern != ec.pattern) continue;
    } else if (r.split != ec.split) {
      continue;
    }
    picked.push_back(&r);
  }
  if (picked.empty()) fail(ErrorCode::validation, "no dataset samples match the eval selection");

  std::map<std::string, Geometry> cache;
  std::vector<MetricRow> rows;
  EvalAccumulator vel_acc, n0_acc, np_acc;
  double infer_seconds = 0.0;
  for (const SampleRecord* rec : picked) {
    const FieldSeries series = load_field_series(man.sample_path(*rec));
    Geometry& geo = cache.try_emplace(series.skeleton).first->second;
    if (geo.g.total_points == 0)
      geo = build(resolve_skeleton(series.skeleton, man.root), series.spacing);

    InferenceOptions opts;
    opts.params = man.params;
    opts.reaction = {series.k_plus, series.k_plus_prime};
    opts.divergence_limit = ec.divergence_limit;
    const PredictionBundle b = run_inference(m, geo.g, geo.gb, series.bc, series.times, opts);
    infer_seconds += b.timings.total();

    const std::vector<int64_t> bounds = section_bounds(geo.g);
    const FieldError vel = vector_grouped_error(b.velocity, series.velocity, 3, bounds);
    vel_acc.add(vel.mre, vel.max_re);
    const int64_t n = geo.g.total_points;
    const int64_t t_count = std::ssize(series.times);
    EvalAccumulator s_n0, s_np;
    for (int64_t t = 0; t < t_count; ++t) {
      const auto pred0 = std::span<const double>(b.n0).subspan(t * n, n);
      const auto exact0 = std::span<const double>(series.n0).subspan(t * n, n);
      const FieldError e0 = scalar_grouped_error(pred0, exact0, bounds);
      s_n0.add(e0.mre, e0.max_re);
      const auto predp = std::span<const double>(b.nplus).subspan(t * n, n);
      const auto exactp = std::span<const double>(series.nplus).subspan(t * n, n);
      const FieldError ep = scalar_grouped_error(predp, exactp, bounds);
      s_np.add(ep.mre, ep.max_re);
    }
    n0_acc.add(s_n0.mean(), s_n0.maxre);
    np_acc.add(s_np.mean(), s_np.maxre);
    rows.push_back({rec->file + ":velocity", vel.mre, vel.max_re});
    rows.push_back({rec->file + ":n0", s_n0.mean(), s_n0.maxre});
    rows.push_back({rec->file + ":nplus", s_np.mean(), s_np.maxre});

    if (ec.write_vtk) {
      const int64_t last = t_count - 1;
      std::vector<double> total_exact(n);
      for (int64_t i = 0; i < n; ++i)
        total_exact[i] = series.n0[last * n + i] + series.nplus[last * n + i];
      const ErrorReport total = scalar_error_report(
          std::span<const double>(b.total_concentration).subspan(last * n, n), total_exact);
      fs::path out = ec.output_dir / (fs::path(rec->file).stem().string() + "_final.vtk");
      export_snapshot_vtk(out, geo.g, b, last, total.per_node);
    }
  }
  rows.push_back({"mean:velocity", vel_acc.mean(), vel_acc.maxre});
  rows.push_back({"mean:n0", n0_acc.mean(), n0_acc.maxre});
  rows.push_back({"mean:nplus", np_acc.mean(), np_acc.maxre});
  write_metrics_csv(ec.output_dir / "metrics.csv", rows);
  write_metrics_json(ec.output_dir / "metrics.json", rows);
  std::printf("galds-summary command=eval samples=%zu velocity_mre=%.4f velocity_maxre=%.4f "
              "n0_mre=%.4f n0_maxre=%.4f nplus_mre=%.4f nplus_maxre=%.4f "
              "mean_infer_seconds=%.4f\n",
              picked.size(), vel_acc.mean(), vel_acc.maxre, n0_acc.mean(), n0_acc.maxre,
              np_acc.mean(), np_acc.maxre,
              infer_seconds / static_cast<double>(picked.size()));
  return 0;
}

int cmd_bench(RunConfig cfg, const CliOverrides&) {
  const BenchConfig& bc = cfg.bench;
  require_file(bc.checkpoint, "bench.checkpoint");
  require_file(bc.skeleton, "bench.skeleton");
  require_out_dir(bc.output_dir, "bench.output_dir");
  if (bc.repetitions < 1) fail(ErrorCode::validation, "bench.repetitions must be >= 1");
  ModelSet m = load_gated_model(bc.checkpoint, cfg.gates);
  Geometry geo = build(bc.skeleton, bc.spacing);

  // Reference transport solve, best of N runs. The construction cost is part
  // of the solve: the surrogate does not get to skip its own setup either.
  double oracle_seconds = 1e300;
  std::vector<double> times;
  int64_t steps = 0;
  for (int32_t r = 0; r < bc.repetitions; ++r) {
    const Clock::time_point start = Clock::now();
    const HydraulicSolution hyd = solve_hydraulics(geo.g, cfg.bc.u_t, cfg.params.viscosity);
    const VelocityField vel = reconstruct_velocity(geo.g, hyd, 0.0);
    TransportSimulator sim(geo.g, vel, hyd, cfg.params, cfg.bc);
    const double dt = std::min(bc.dt, sim.stable_dt());
    const TransportRun run = run_transport(sim, dt, bc.t_end, bc.save_stride);
    oracle_seconds = std::min(oracle_seconds, elapsed(start));
    times = run.times;
    steps = run.steps;
  }

  InferenceOptions opts;
  opts.params = cfg.params;
  double surrogate_seconds = 1e300;
  StepTimings timings;
  for (int32_t r = 0; r < bc.repetitions; ++r) {
    const PredictionBundle b = run_inference(m, geo.g, geo.gb, cfg.bc, times, opts);
    surrogate_seconds = std::min(surrogate_seconds, b.timings.total());
    timings = b.timings;
  }
  const double speedup = oracle_seconds / surrogate_seconds;

  nlohmann::json doc = {{"geometry", bc.skeleton.stem().string()},
                        {"sections", geo.g.section_count()},
                        {"points", geo.g.total_points},
                        {"reference", "in-repo transport solver, same geometry and horizon"},
                        {"oracle_steps", steps},
                        {"snapshots", times.size()},
                        {"repetitions", bc.repetitions},
                        {"oracle_seconds", oracle_seconds},
                        {"surrogate_seconds", surrogate_seconds},
                        {"speedup", speedup}};
  std::ofstream out(bc.output_dir / "bench.json");
  if (!out) fail(ErrorCode::io, "cannot write the benchmark report");
  out << doc.dump(2) << "\n";
  write_timings_json(bc.output_dir / "timings.json", timings);
  std::printf("galds-summary command=bench oracle_seconds=%.4f surrogate_seconds=%.4f "
              "speedup=%.2f\n",
              oracle_seconds, surrogate_seconds, speedup);
  return 0;
}

}  // namespace

int run_command(const std::string& command, const std::filesystem::path& config_path,
                const CliOverrides& overrides) {
  try {
    const RunConfig cfg = parse_run_config(config_path);
    std::printf("# galds %s, config %s\n%s", command.c_str(), config_path.string().c_str(),
                echo_run_config(cfg).c_str());
    if (command == "gen-data") return cmd_gen_data(cfg, overrides);
    if (command == "train") return cmd_train(cfg, overrides);
    if (command == "infer") return cmd_infer(cfg, overrides);
    if (command == "eval") return cmd_eval(cfg, overrides);
    if (command == "bench") return cmd_bench(cfg, overrides);
    fail(ErrorCode::usage, "unknown command '" + command + "'");
  } catch (const Error& e) {
    std::fprintf(stderr, "galds %s: error: %s\n", command.c_str(), e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "galds %s: unexpected error: %s\n", command.c_str(), e.what());
    return static_cast<int>(ErrorCode::usage);
  }
}

}  // namespace galds
