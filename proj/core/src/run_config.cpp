#include "galds/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "galds/error.hpp"
#include "galds/toml_lite.hpp"

namespace galds {
namespace {

// Shortest representation that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) fail(ErrorCode::numeric, "cannot format number");
  return std::string(buf, p);
}

std::string quoted(const std::filesystem::path& p) { return "\"" + p.generic_string() + "\""; }
std::string quoted(const std::string& s) { return "\"" + s + "\""; }
const char* fmt(bool v) { return v ? "true" : "false"; }

void read_params(TomlTable& t, TransportParams& p) {
  p.diffusion = t.get_double("params.diffusion", p.diffusion);
  p.k_plus = t.get_double("params.k_plus", p.k_plus);
  p.k_plus_prime = t.get_double("params.k_plus_prime", p.k_plus_prime);
  p.viscosity = t.get_double("params.viscosity", p.viscosity);
}

void read_bc(TomlTable& t, TransportBC& bc) {
  bc.u_t = t.get_double("bc.u_t", bc.u_t);
  bc.n_in = t.get_double("bc.n_in", bc.n_in);
  bc.n_out = t.get_double("bc.n_out", bc.n_out);
  bc.lambda_in = t.get_double("bc.lambda_in", bc.lambda_in);
}

void read_gates(TomlTable& t, InferenceGates& g) {
  g.velocity_ae_mre = t.get_double("gates.velocity_mre", g.velocity_ae_mre);
  g.psi_u_mre = t.get_double("gates.psi_u_mre", g.psi_u_mre);
  g.concentration_ae_mre = t.get_double("gates.concentration_mre", g.concentration_ae_mre);
}

void read_dataset(TomlTable& t, DatasetConfig& d) {
  d.output_dir = t.get_string("dataset.output_dir", d.output_dir.generic_string());
  d.spacing = t.get_double("dataset.spacing", d.spacing);
  d.train_samples = static_cast<int32_t>(t.get_int("dataset.train_samples", d.train_samples));
  d.eval_samples = static_cast<int32_t>(t.get_int("dataset.eval_samples", d.eval_samples));
  d.u_t_min = t.get_double("dataset.u_t_min", d.u_t_min);
  d.u_t_max = t.get_double("dataset.u_t_max", d.u_t_max);
  d.n_in_min = t.get_double("dataset.n_in_min", d.n_in_min);
  d.n_in_max = t.get_double("dataset.n_in_max", d.n_in_max);
  d.n_out_frac_min = t.get_double("dataset.n_out_frac_min", d.n_out_frac_min);
  d.n_out_frac_max = t.get_double("dataset.n_out_frac_max", d.n_out_frac_max);
  d.lambda_min = t.get_double("dataset.lambda_min", d.lambda_min);
  d.lambda_max = t.get_double("dataset.lambda_max", d.lambda_max);
  d.dt = t.get_double("dataset.dt", d.dt);
  d.t_end = t.get_double("dataset.t_end", d.t_end);
  d.save_stride = t.get_int("dataset.save_stride", d.save_stride);
  d.steady_tol = t.get_double("dataset.steady_tol", d.steady_tol);
  d.perturbation_scale = t.get_double("dataset.perturbation_scale", d.perturbation_scale);
  d.seed = static_cast<uint64_t>(t.get_int("dataset.seed", static_cast<int64_t>(d.seed)));
  d.workers = static_cast<int32_t>(t.get_int("dataset.workers", d.workers));
  d.quadrant_mode = t.get_bool("dataset.quadrant_mode", d.quadrant_mode);
  d.k_high = t.get_double("dataset.k_high", d.k_high);
  d.k_low = t.get_double("dataset.k_low", d.k_low);
  d.patterned_arc_min = t.get_double("dataset.patterned_arc_min", d.patterned_arc_min);
  d.patterned_arc_max = t.get_double("dataset.patterned_arc_max", d.patterned_arc_max);

  const int64_t n = t.table_array_size("geometry");
  d.geometries.clear();
  for (int64_t i = 0; i < n; ++i) {
    const std::string p = "geometry." + std::to_string(i) + ".";
    GeometryJob job;
    job.id = t.require_string(p + "id");
    job.skeleton = t.require_string(p + "skeleton");
    job.split = t.get_string(p + "split", "train");
    if (job.split != "train" && job.split != "eval")
      fail(ErrorCode::validation, "geometry split must be 'train' or 'eval', got '" +
                                      job.split + "' for " + job.id);
    d.geometries.push_back(std::move(job));
  }
}

void read_model(TomlTable& t, ModelConfig& m) {
  m.hidden = static_cast<int32_t>(t.get_int("model.hidden", m.hidden));
  m.velocity_latent = static_cast<int32_t>(t.get_int("model.velocity_latent", m.velocity_latent));
  m.species_latent = static_cast<int32_t>(t.get_int("model.species_latent", m.species_latent));
  m.psi_u_hidden = static_cast<int32_t>(t.get_int("model.psi_u_hidden", m.psi_u_hidden));
  m.psi_u_side_features = t.get_bool("model.psi_u_side_features", m.psi_u_side_features);
  m.psi_z_hidden = static_cast<int32_t>(t.get_int("model.psi_z_hidden", m.psi_z_hidden));
  m.psi_z_layers = static_cast<int32_t>(t.get_int("model.psi_z_layers", m.psi_z_layers));
  m.psi_z_act = activation_from_name(
      t.get_string("model.psi_z_activation", activation_name(m.psi_z_act)));
  m.reaction_features = t.get_bool("model.reaction_features", m.reaction_features);
  m.feed_initial = t.get_bool("model.feed_initial", m.feed_initial);
  m.integrator = integrator_from_name(
      t.get_string("model.integrator", integrator_name(m.integrator)));
  m.time_scale = t.get_double("model.time_scale", m.time_scale);
}

void read_train(TomlTable& t, TrainConfig& c) {
  c.manifest = t.get_string("train.manifest", c.manifest.generic_string());
  c.out_dir = t.get_string("train.output_dir", c.out_dir.generic_string());
  c.seed = static_cast<uint64_t>(t.get_int("train.seed", static_cast<int64_t>(c.seed)));
  c.lr = t.get_double("train.lr", c.lr);
  c.epochs_phase1 = static_cast<int32_t>(t.get_int("train.epochs_phase1", c.epochs_phase1));
  c.epochs_phase2 = static_cast<int32_t>(t.get_int("train.epochs_phase2", c.epochs_phase2));
  c.epochs_phase3 = static_cast<int32_t>(t.get_int("train.epochs_phase3", c.epochs_phase3));
  c.epochs_phase4 = static_cast<int32_t>(t.get_int("train.epochs_phase4", c.epochs_phase4));
  c.epochs_joint = static_cast<int32_t>(t.get_int("train.epochs_joint", c.epochs_joint));
  c.epochs_rollout = static_cast<int32_t>(t.get_int("train.epochs_rollout", c.epochs_rollout));
  c.early_stop_window =
      static_cast<int32_t>(t.get_int("train.early_stop_window", c.early_stop_window));
  c.early_stop_delta = t.get_double("train.early_stop_delta", c.early_stop_delta);
  c.val_fraction = t.get_double("train.val_fraction", c.val_fraction);
  c.snapshot_stride = static_cast<int32_t>(t.get_int("train.snapshot_stride", c.snapshot_stride));
  c.pair_stride = static_cast<int32_t>(t.get_int("train.pair_stride", c.pair_stride));
  c.chunk_sections = static_cast<int32_t>(t.get_int("train.chunk_sections", c.chunk_sections));
  c.chunk_pairs = static_cast<int32_t>(t.get_int("train.chunk_pairs", c.chunk_pairs));
  c.phase1 = t.get_bool("train.phase1", c.phase1);
  c.phase2 = t.get_bool("train.phase2", c.phase2);
  c.phase3 = t.get_bool("train.phase3", c.phase3);
  c.phase4 = t.get_bool("train.phase4", c.phase4);
  c.rollout_finetune = t.get_bool("train.rollout_finetune", c.rollout_finetune);
  c.case2 = t.get_bool("train.case2", c.case2);
  c.base_checkpoint = t.get_string("train.base_checkpoint", c.base_checkpoint.generic_string());
}

void read_infer(TomlTable& t, InferConfig& c) {
  c.checkpoint = t.get_string("infer.checkpoint", c.checkpoint.generic_string());
  c.skeleton = t.get_string("infer.skeleton", c.skeleton.generic_string());
  c.output_dir = t.get_string("infer.output_dir", c.output_dir.generic_string());
  c.spacing = t.get_double("infer.spacing", c.spacing);
  c.t_end = t.get_double("infer.t_end", c.t_end);
  c.dt = t.get_double("infer.dt", c.dt);
  c.save_stride = t.get_int("infer.save_stride", c.save_stride);
  c.divergence_limit = t.get_double("infer.divergence_limit", c.divergence_limit);
  c.vtk_stride = t.get_int("infer.vtk_stride", c.vtk_stride);
}

void read_eval(TomlTable& t, EvalConfig& c) {
  c.checkpoint = t.get_string("eval.checkpoint", c.checkpoint.generic_string());
  c.manifest = t.get_string("eval.manifest", c.manifest.generic_string());
  c.output_dir = t.get_string("eval.output_dir", c.output_dir.generic_string());
  c.split = t.get_string("eval.split", c.split);
  if (c.split != "train" && c.split != "eval")
    fail(ErrorCode::validation, "eval split must be 'train' or 'eval'");
  c.pattern = static_cast<int32_t>(t.get_int("eval.pattern", c.pattern));
  c.divergence_limit = t.get_double("eval.divergence_limit", c.divergence_limit);
  c.write_vtk = t.get_bool("eval.write_vtk", c.write_vtk);
}

void read_bench(TomlTable& t, BenchConfig& c) {
  c.checkpoint = t.get_string("bench.checkpoint", c.checkpoint.generic_string());
  c.skeleton = t.get_string("bench.skeleton", c.skeleton.generic_string());
  c.output_dir = t.get_string("bench.output_dir", c.output_dir.generic_string());
  c.spacing = t.get_double("bench.spacing", c.spacing);
  c.t_end = t.get_double("bench.t_end", c.t_end);
  c.dt = t.get_double("bench.dt", c.dt);
  c.save_stride = t.get_int("bench.save_stride", c.save_stride);
  c.repetitions = static_cast<int32_t>(t.get_int("bench.repetitions", c.repetitions));
}

}  // namespace

RunConfig parse_run_config_text(std::string_view text, const std::string& source) {
  TomlTable t = parse_toml(text, source);
  RunConfig c;
  read_params(t, c.params);
  read_bc(t, c.bc);
  read_gates(t, c.gates);
  read_dataset(t, c.dataset);
  read_model(t, c.train.model);
  read_train(t, c.train);
  read_infer(t, c.infer);
  read_eval(t, c.eval);
  read_bench(t, c.bench);
  t.require_consumed();
  c.dataset.params = c.params;
  return c;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path.string());
}

std::string echo_run_config(const RunConfig& cfg) {
  std::ostringstream o;
  o << "[params]\n";
  o << "diffusion = " << fmt(cfg.params.diffusion) << "\n";
  o << "k_plus = " << fmt(cfg.params.k_plus) << "\n";
  o << "k_plus_prime = " << fmt(cfg.params.k_plus_prime) << "\n";
  o << "viscosity = " << fmt(cfg.params.viscosity) << "\n\n";

  o << "[bc]\n";
  o << "u_t = " << fmt(cfg.bc.u_t) << "\n";
  o << "n_in = " << fmt(cfg.bc.n_in) << "\n";
  o << "n_out = " << fmt(cfg.bc.n_out) << "\n";
  o << "lambda_in = " << fmt(cfg.bc.lambda_in) << "\n\n";

  o << "[gates]\n";
  o << "velocity_mre = " << fmt(cfg.gates.velocity_ae_mre) << "\n";
  o << "psi_u_mre = " << fmt(cfg.gates.psi_u_mre) << "\n";
  o << "concentration_mre = " << fmt(cfg.gates.concentration_ae_mre) << "\n\n";

  const DatasetConfig& d = cfg.dataset;
  o << "[dataset]\n";
  o << "output_dir = " << quoted(d.output_dir) << "\n";
  o << "spacing = " << fmt(d.spacing) << "\n";
  o << "train_samples = " << d.train_samples << "\n";
  o << "eval_samples = " << d.eval_samples << "\n";
  o << "u_t_min = " << fmt(d.u_t_min) << "\n";
  o << "u_t_max = " << fmt(d.u_t_max) << "\n";
  o << "n_in_min = " << fmt(d.n_in_min) << "\n";
  o << "n_in_max = " << fmt(d.n_in_max) << "\n";
  o << "n_out_frac_min = " << fmt(d.n_out_frac_min) << "\n";
  o << "n_out_frac_max = " << fmt(d.n_out_frac_max) << "\n";
  o << "lambda_min = " << fmt(d.lambda_min) << "\n";
  o << "lambda_max = " << fmt(d.lambda_max) << "\n";
  o << "dt = " << fmt(d.dt) << "\n";
  o << "t_end = " << fmt(d.t_end) << "\n";
  o << "save_stride = " << d.save_stride << "\n";
  o << "steady_tol = " << fmt(d.steady_tol) << "\n";
  o << "perturbation_scale = " << fmt(d.perturbation_scale) << "\n";
  o << "seed = " << d.seed << "\n";
  o << "workers = " << d.workers << "\n";
  o << "quadrant_mode = " << fmt(d.quadrant_mode) << "\n";
  o << "k_high = " << fmt(d.k_high) << "\n";
  o << "k_low = " << fmt(d.k_low) << "\n";
  o << "patterned_arc_min = " << fmt(d.patterned_arc_min) << "\n";
  o << "patterned_arc_max = " << fmt(d.patterned_arc_max) << "\n";
  for (const GeometryJob& g : d.geometries) {
    o << "\n[[geometry]]\n";
    o << "id = " << quoted(g.id) << "\n";
    o << "skeleton = " << quoted(g.skeleton) << "\n";
    o << "split = " << quoted(g.split) << "\n";
  }
  o << "\n";

  const ModelConfig& m = cfg.train.model;
  o << "[model]\n";
  o << "hidden = " << m.hidden << "\n";
  o << "velocity_latent = " << m.velocity_latent << "\n";
  o << "species_latent = " << m.species_latent << "\n";
  o << "psi_u_hidden = " << m.psi_u_hidden << "\n";
  o << "psi_u_side_features = " << fmt(m.psi_u_side_features) << "\n";
  o << "psi_z_hidden = " << m.psi_z_hidden << "\n";
  o << "psi_z_layers = " << m.psi_z_layers << "\n";
  o << "psi_z_activation = " << quoted(activation_name(m.psi_z_act)) << "\n";
  o << "reaction_features = " << fmt(m.reaction_features) << "\n";
  o << "feed_initial = " << fmt(m.feed_initial) << "\n";
  o << "integrator = " << quoted(integrator_name(m.integrator)) << "\n";
  o << "time_scale = " << fmt(m.time_scale) << "\n\n";

  const TrainConfig& tr = cfg.train;
  o << "[train]\n";
  o << "manifest = " << quoted(tr.manifest) << "\n";
  o << "output_dir = " << quoted(tr.out_dir) << "\n";
  o << "seed = " << tr.seed << "\n";
  o << "lr = " << fmt(tr.lr) << "\n";
  o << "epochs_phase1 = " << tr.epochs_phase1 << "\n";
  o << "epochs_phase2 = " << tr.epochs_phase2 << "\n";
  o << "epochs_phase3 = " << tr.epochs_phase3 << "\n";
  o << "epochs_phase4 = " << tr.epochs_phase4 << "\n";
  o << "epochs_joint = " << tr.epochs_joint << "\n";
  o << "epochs_rollout = " << tr.epochs_rollout << "\n";
  o << "early_stop_window = " << tr.early_stop_window << "\n";
  o << "early_stop_delta = " << fmt(tr.early_stop_delta) << "\n";
  o << "val_fraction = " << fmt(tr.val_fraction) << "\n";
  o << "snapshot_stride = " << tr.snapshot_stride << "\n";
  o << "pair_stride = " << tr.pair_stride << "\n";
  o << "chunk_sections = " << tr.chunk_sections << "\n";
  o << "chunk_pairs = " << tr.chunk_pairs << "\n";
  o << "phase1 = " << fmt(tr.phase1) << "\n";
  o << "phase2 = " << fmt(tr.phase2) << "\n";
  o << "phase3 = " << fmt(tr.phase3) << "\n";
  o << "phase4 = " << fmt(tr.phase4) << "\n";
  o << "rollout_finetune = " << fmt(tr.rollout_finetune) << "\n";
  o << "case2 = " << fmt(tr.case2) << "\n";
  o << "base_checkpoint = " << quoted(tr.base_checkpoint) << "\n\n";

  const InferConfig& inf = cfg.infer;
  o << "[infer]\n";
  o << "checkpoint = " << quoted(inf.checkpoint) << "\n";
  o << "skeleton = " << quoted(inf.skeleton) << "\n";
  o << "output_dir = " << quoted(inf.output_dir) << "\n";
  o << "spacing = " << fmt(inf.spacing) << "\n";
  o << "t_end = " << fmt(inf.t_end) << "\n";
  o << "dt = " << fmt(inf.dt) << "\n";
  o << "save_stride = " << inf.save_stride << "\n";
  o << "divergence_limit = " << fmt(inf.divergence_limit) << "\n";
  o << "vtk_stride = " << inf.vtk_stride << "\n\n";

  const EvalConfig& ev = cfg.eval;
  o << "[eval]\n";
  o << "checkpoint = " << quoted(ev.checkpoint) << "\n";
  o << "manifest = " << quoted(ev.manifest) << "\n";
  o << "output_dir = " << quoted(ev.output_dir) << "\n";
  o << "split = " << quoted(ev.split) << "\n";
  o << "pattern = " << ev.pattern << "\n";
  o << "divergence_limit = " << fmt(ev.divergence_limit) << "\n";
  o << "write_vtk = " << fmt(ev.write_vtk) << "\n\n";

  const BenchConfig& b = cfg.bench;
  o << "[bench]\n";
  o << "checkpoint = " << quoted(b.checkpoint) << "\n";
  o << "skeleton = " << quoted(b.skeleton) << "\n";
  o << "output_dir = " << quoted(b.output_dir) << "\n";
  o << "spacing = " << fmt(b.spacing) << "\n";
  o << "t_end = " << fmt(b.t_end) << "\n";
  o << "dt = " << fmt(b.dt) << "\n";
  o << "save_stride = " << b.save_stride << "\n";
  o << "repetitions = " << b.repetitions << "\n";
  return o.str();
}

}  // namespace galds
