#include "galds/dataset.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <thread>

#include <nlohmann/json.hpp>

#include "galds/checkpoint.hpp"
#include "galds/error.hpp"
#include "galds/rng.hpp"
#include "galds/velocity_field.hpp"

namespace galds {
namespace {

using nlohmann::json;

void put_params(BlobContainer& c, const TransportParams& p, const TransportBC& b) {
  c.set_meta_double("diffusion", p.diffusion);
  c.set_meta_double("k_plus", p.k_plus);
  c.set_meta_double("k_plus_prime", p.k_plus_prime);
  c.set_meta_double("viscosity", p.viscosity);
  c.set_meta_double("bc.u_t", b.u_t);
  c.set_meta_double("bc.n_in", b.n_in);
  c.set_meta_double("bc.n_out", b.n_out);
  c.set_meta_double("bc.lambda_in", b.lambda_in);
}

json bc_to_json(const TransportBC& b) {
  return json{{"u_t", b.u_t}, {"n_in", b.n_in}, {"n_out", b.n_out}, {"lambda_in", b.lambda_in}};
}

TransportBC bc_from_json(const json& j) {
  TransportBC b;
  b.u_t = j.at("u_t").get<double>();
  b.n_in = j.at("n_in").get<double>();
  b.n_out = j.at("n_out").get<double>();
  b.lambda_in = j.at("lambda_in").get<double>();
  return b;
}

}  // namespace

void save_field_series(const std::filesystem::path& path, const FieldSeries& fs) {
  BlobContainer c;
  c.set_meta("kind", "field_series");
  c.set_meta("geometry_id", fs.geometry_id);
  c.set_meta("skeleton", fs.skeleton);
  c.set_meta_double("spacing", fs.spacing);
  c.set_meta_double("perturbation_scale", fs.perturbation_scale);
  c.set_meta_int("reached_steady", fs.reached_steady ? 1 : 0);
  c.set_meta_int("pattern", fs.pattern);
  put_params(c, fs.params, fs.bc);

  const int64_t t = fs.snapshots();
  const int64_t n = fs.points();
  const int64_t s = fs.sections();
  c.put("times", {t}, fs.times);
  c.put("u1d", {s, 3}, fs.u1d);
  c.put("velocity", {n, 3}, fs.velocity);
  c.put("n0", {t, n}, fs.n0);
  c.put("nplus", {t, n}, fs.nplus);
  c.put("k_plus", {n}, fs.k_plus);
  c.put("k_plus_prime", {n}, fs.k_plus_prime);
  c.save(path, kFieldSeriesMagic);
}

FieldSeries load_field_series(const std::filesystem::path& path) {
  BlobContainer c = BlobContainer::load(path, kFieldSeriesMagic);
  FieldSeries fs;
  fs.geometry_id = c.meta("geometry_id");
  fs.skeleton = c.meta("skeleton");
  fs.spacing = c.meta_double("spacing");
  fs.perturbation_scale = c.meta_double("perturbation_scale");
  fs.reached_steady = c.meta_int("reached_steady") != 0;
  fs.pattern = static_cast<int32_t>(c.meta_int("pattern"));
  fs.params.diffusion = c.meta_double("diffusion");
  fs.params.k_plus = c.meta_double("k_plus");
  fs.params.k_plus_prime = c.meta_double("k_plus_prime");
  fs.params.viscosity = c.meta_double("viscosity");
  fs.bc.u_t = c.meta_double("bc.u_t");
  fs.bc.n_in = c.meta_double("bc.n_in");
  fs.bc.n_out = c.meta_double("bc.n_out");
  fs.bc.lambda_in = c.meta_double("bc.lambda_in");
  fs.times = c.entry("times").data;
  fs.u1d = c.entry("u1d").data;
  fs.velocity = c.entry("velocity").data;
  fs.n0 = c.entry("n0").data;
  fs.nplus = c.entry("nplus").data;
  fs.k_plus = c.entry("k_plus").data;
  fs.k_plus_prime = c.entry("k_plus_prime").data;
  if (fs.snapshots() * fs.points() != static_cast<int64_t>(fs.n0.size()))
    fail(ErrorCode::io, "field series is inconsistent: " + path.string());
  return fs;
}

std::array<std::array<bool, 4>, 6> quadrant_patterns() {
  // H = true. The complement pair (index 4, index 5) lets the held-out layout
  // stay inside the span of the trained ones.
  return {{{true, false, true, false},
           {false, true, false, true},
           {true, true, false, false},
           {false, false, true, true},
           {true, false, false, true},
           {false, true, true, false}}};
}

std::vector<double> quadrant_k_field(const GlobalGraph& g, const std::array<bool, 4>& high,
                                     double k_high, double k_low, double k_normal,
                                     double arc_min, double arc_max) {
  std::vector<double> k(g.total_points, k_normal);
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (int64_t s = 0; s < g.section_count(); ++s) {
    const double a = g.c_feature[s];
    if (a < arc_min || a > arc_max) continue;
    const TemplateGraph& tpl = g.section_template(static_cast<int32_t>(s));
    for (int32_t p = 0; p < tpl.p; ++p) {
      if (tpl.rho[p] <= 1e-12) continue;  // axis point has no quadrant
      double th = std::fmod(tpl.theta[p], 2.0 * std::numbers::pi);
      if (th < 0.0) th += 2.0 * std::numbers::pi;
      const int q = std::min(3, static_cast<int>(th / half_pi));
      k[g.point_offset[s] + p] = high[q] ? k_high : k_low;
    }
  }
  return k;
}

namespace {

struct Job {
  int32_t geometry = 0;  // index into built geometries
  SampleRecord record;
};

FieldSeries run_job(const GlobalGraph& g, const DatasetConfig& cfg, const SampleRecord& rec) {
  const HydraulicSolution hyd = solve_hydraulics(g, rec.bc.u_t, cfg.params.viscosity);
  const VelocityField vel = reconstruct_velocity(g, hyd, cfg.perturbation_scale);

  ReactionField rf;
  if (rec.pattern >= 0) {
    rf.k_plus = quadrant_k_field(g, quadrant_patterns()[rec.pattern], cfg.k_high, cfg.k_low,
                                 cfg.params.k_plus, cfg.patterned_arc_min, cfg.patterned_arc_max);
    rf.k_plus_prime.assign(g.total_points, cfg.params.k_plus_prime);
  }

  TransportSimulator sim(g, vel, hyd, cfg.params, rec.bc,
                         rec.pattern >= 0 ? rf : ReactionField{});
  TransportRun run = run_transport(sim, cfg.dt, cfg.t_end, cfg.save_stride, cfg.steady_tol);

  FieldSeries fs;
  fs.geometry_id = rec.geometry_id;
  fs.skeleton = rec.skeleton;
  fs.spacing = cfg.spacing;
  fs.params = cfg.params;
  fs.bc = rec.bc;
  fs.perturbation_scale = cfg.perturbation_scale;
  fs.reached_steady = run.reached_steady;
  fs.pattern = rec.pattern;
  fs.times = run.times;
  fs.u1d = vel.u1d;
  fs.velocity = vel.local;
  const int64_t n = g.total_points;
  fs.n0.resize(run.times.size() * n);
  fs.nplus.resize(run.times.size() * n);
  for (size_t t = 0; t < run.times.size(); ++t) {
    std::copy(run.n0[t].begin(), run.n0[t].end(), fs.n0.begin() + t * n);
    std::copy(run.nplus[t].begin(), run.nplus[t].end(), fs.nplus.begin() + t * n);
  }
  if (rec.pattern >= 0) {
    fs.k_plus = rf.k_plus;
    fs.k_plus_prime = rf.k_plus_prime;
  } else {
    fs.k_plus.assign(n, cfg.params.k_plus);
    fs.k_plus_prime.assign(n, cfg.params.k_plus_prime);
  }
  return fs;
}

}  // namespace

DatasetManifest generate_dataset(const DatasetConfig& cfg) {
  if (cfg.geometries.empty()) fail(ErrorCode::validation, "dataset needs at least one geometry");
  std::filesystem::create_directories(cfg.output_dir);

  std::vector<GlobalGraph> graphs;
  graphs.reserve(cfg.geometries.size());
  for (const auto& gj : cfg.geometries)
    graphs.push_back(build_geometry(load_skeleton(gj.skeleton), cfg.spacing));

  // Boundary conditions are drawn up front in a fixed order so the dataset
  // does not depend on worker count.
  Rng rng(cfg.seed);
  std::vector<Job> jobs;
  for (size_t gi = 0; gi < cfg.geometries.size(); ++gi) {
    const GeometryJob& gj = cfg.geometries[gi];
    if (gj.split != "train" && gj.split != "eval")
      fail(ErrorCode::validation, "geometry split must be train or eval: " + gj.id);
    auto draw_bc = [&] {
      TransportBC bc;
      bc.u_t = rng.uniform(cfg.u_t_min, cfg.u_t_max);
      bc.n_in = rng.uniform(cfg.n_in_min, cfg.n_in_max);
      bc.n_out = bc.n_in * rng.uniform(cfg.n_out_frac_min, cfg.n_out_frac_max);
      bc.lambda_in = rng.uniform(cfg.lambda_min, cfg.lambda_max);
      return bc;
    };
    if (cfg.quadrant_mode) {
      const TransportBC bc = draw_bc();
      for (int32_t p = 0; p < 6; ++p) {
        Job j;
        j.geometry = static_cast<int32_t>(gi);
        j.record.geometry_id = gj.id;
        j.record.skeleton = gj.skeleton.string();
        j.record.split = (p == 5) ? "eval" : gj.split;
        j.record.pattern = p;
        j.record.bc = bc;
        j.record.file = gj.id + "_p" + std::to_string(p) + ".gfs";
        jobs.push_back(std::move(j));
      }
    } else {
      const int32_t count = (gj.split == "train") ? cfg.train_samples : cfg.eval_samples;
      for (int32_t s = 0; s < count; ++s) {
        Job j;
        j.geometry = static_cast<int32_t>(gi);
        j.record.geometry_id = gj.id;
        j.record.skeleton = gj.skeleton.string();
        j.record.split = gj.split;
        j.record.bc = draw_bc();
        j.record.file = gj.id + "_" + gj.split + "_" + std::to_string(s) + ".gfs";
        jobs.push_back(std::move(j));
      }
    }
  }

  auto run_one = [&](const Job& j) {
    const FieldSeries fs = run_job(graphs[j.geometry], cfg, j.record);
    save_field_series(cfg.output_dir / j.record.file, fs);
  };
  const int32_t workers = std::max<int32_t>(1, cfg.workers);
  if (workers == 1 || jobs.size() < 2) {
    for (const Job& j : jobs) run_one(j);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;
    for (int32_t w = 0; w < std::min<int32_t>(workers, static_cast<int32_t>(jobs.size())); ++w) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
          if (failed.load()) return;
          try {
            run_one(jobs[i]);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(err_mutex);
            if (!failed.exchange(true)) first_error = e.what();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) fail(ErrorCode::numeric, "dataset generation failed: " + first_error);
  }

  DatasetManifest m;
  m.root = cfg.output_dir;
  m.spacing = cfg.spacing;
  m.params = cfg.params;
  m.perturbation_scale = cfg.perturbation_scale;
  m.quadrant_mode = cfg.quadrant_mode;
  for (Job& j : jobs) m.samples.push_back(std::move(j.record));

  json doc;
  doc["spacing"] = m.spacing;
  doc["perturbation_scale"] = m.perturbation_scale;
  doc["quadrant_mode"] = m.quadrant_mode;
  doc["params"] = {{"diffusion", m.params.diffusion},
                   {"k_plus", m.params.k_plus},
                   {"k_plus_prime", m.params.k_plus_prime},
                   {"viscosity", m.params.viscosity}};
  doc["samples"] = json::array();
  for (const SampleRecord& s : m.samples) {
    doc["samples"].push_back({{"file", s.file},
                              {"geometry", s.geometry_id},
                              {"skeleton", s.skeleton},
                              {"split", s.split},
                              {"pattern", s.pattern},
                              {"bc", bc_to_json(s.bc)}});
  }
  std::ofstream out(cfg.output_dir / "manifest.json");
  if (!out) fail(ErrorCode::io, "cannot write manifest under " + cfg.output_dir.string());
  out << doc.dump(2) << "\n";
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open manifest: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    fail(ErrorCode::io, "malformed manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.root = path.parent_path();
  try {
    m.spacing = doc.at("spacing").get<double>();
    m.perturbation_scale = doc.at("perturbation_scale").get<double>();
    m.quadrant_mode = doc.at("quadrant_mode").get<bool>();
    const json& p = doc.at("params");
    m.params.diffusion = p.at("diffusion").get<double>();
    m.params.k_plus = p.at("k_plus").get<double>();
    m.params.k_plus_prime = p.at("k_plus_prime").get<double>();
    m.params.viscosity = p.at("viscosity").get<double>();
    for (const json& s : doc.at("samples")) {
      SampleRecord r;
      r.file = s.at("file").get<std::string>();
      r.geometry_id = s.at("geometry").get<std::string>();
      r.skeleton = s.at("skeleton").get<std::string>();
      r.split = s.at("split").get<std::string>();
      r.pattern = s.at("pattern").get<int32_t>();
      r.bc = bc_from_json(s.at("bc"));
      m.samples.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::io, "manifest " + path.string() + " is missing fields: " + e.what());
  }
  return m;
}

}  // namespace galds
