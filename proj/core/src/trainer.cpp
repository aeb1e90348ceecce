#include "galds/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>

#include "galds/adam.hpp"
#include "galds/error.hpp"
#include "galds/metrics.hpp"
#include "galds/skeleton.hpp"

namespace fs = std::filesystem;

namespace galds {

PsiUConfig ModelConfig::psi_u_config() const {
  PsiUConfig c;
  c.hidden = psi_u_hidden;
  c.latent = velocity_latent;
  c.side_features = psi_u_side_features;
  return c;
}

PsiZConfig ModelConfig::psi_z_config() const {
  PsiZConfig c;
  c.latent = species_latent;
  c.velocity_latent = velocity_latent;
  c.hidden = psi_z_hidden;
  c.layers = psi_z_layers;
  c.act = psi_z_act;
  c.reaction_features = reaction_features;
  c.feed_initial = feed_initial;
  return c;
}

namespace {

AeConfig ae_config(int32_t channels, int32_t latent, int32_t hidden) {
  AeConfig c;
  c.channels = channels;
  c.latent = latent;
  c.hidden = hidden;
  return c;
}

GraphAutoencoder make_ae(const char* prefix, const AeConfig& cfg, uint64_t seed, uint64_t salt) {
  Rng r = Rng(seed).fork(salt);
  return GraphAutoencoder(prefix, cfg, r);
}

LatentTransform make_psi_u(const PsiUConfig& cfg, uint64_t seed, uint64_t salt) {
  Rng r = Rng(seed).fork(salt);
  return LatentTransform(cfg, r);
}

LatentDynamics make_psi_z(const char* prefix, const PsiZConfig& cfg, uint64_t seed,
                          uint64_t salt) {
  Rng r = Rng(seed).fork(salt);
  return LatentDynamics(prefix, cfg, r);
}

}  // namespace

ModelSet::ModelSet(const ModelConfig& c, uint64_t s)
    : cfg(c),
      seed(s),
      ae_u(make_ae("ae.u", ae_config(3, c.velocity_latent, c.hidden), s, 1)),
      ae_n0(make_ae("ae.n0", ae_config(1, c.species_latent, c.hidden), s, 2)),
      ae_np(make_ae("ae.nplus", ae_config(1, c.species_latent, c.hidden), s, 3)),
      ae_k(make_ae("ae.k", ae_config(1, 1, c.hidden), s, 4)),
      psi_u(make_psi_u(c.psi_u_config(), s, 5)),
      psi_n0(make_psi_z("psi_z.n0", c.psi_z_config(), s, 6)),
      psi_np(make_psi_z("psi_z.nplus", c.psi_z_config(), s, 7)) {}

ParamRegistry ModelSet::all_params() {
  ParamRegistry reg;
  ae_u.collect(reg);
  ae_n0.collect(reg);
  ae_np.collect(reg);
  ae_k.collect(reg);
  psi_u.collect(reg);
  psi_n0.collect(reg);
  psi_np.collect(reg);
  return reg;
}

void ModelSet::save_into(Checkpoint& ck) {
  ck.set_meta_int("model.hidden", cfg.hidden);
  ck.set_meta_int("model.velocity_latent", cfg.velocity_latent);
  ck.set_meta_int("model.species_latent", cfg.species_latent);
  ck.set_meta_int("model.psi_u_hidden", cfg.psi_u_hidden);
  ck.set_meta_int("model.psi_u_side_features", cfg.psi_u_side_features ? 1 : 0);
  ck.set_meta_int("model.psi_z_hidden", cfg.psi_z_hidden);
  ck.set_meta_int("model.psi_z_layers", cfg.psi_z_layers);
  ck.set_meta("model.psi_z_act", activation_name(cfg.psi_z_act));
  ck.set_meta_int("model.reaction_features", cfg.reaction_features ? 1 : 0);
  ck.set_meta_int("model.feed_initial", cfg.feed_initial ? 1 : 0);
  ck.set_meta("model.integrator", integrator_name(cfg.integrator));
  ck.set_meta_double("model.time_scale", cfg.time_scale);
  ck.set_meta_int("seed", static_cast<int64_t>(seed));
  ParamRegistry reg = all_params();
  for (const auto& [name, t] : reg.items()) ck.put_tensor(name, *t);
  ae_u.save_norm(ck);
  ae_n0.save_norm(ck);
  ae_np.save_norm(ck);
  ae_k.save_norm(ck);
  psi_u.save_norm(ck);
}

ModelSet ModelSet::from_checkpoint(const Checkpoint& ck) {
  ModelConfig mc;
  mc.hidden = static_cast<int32_t>(ck.meta_int("model.hidden"));
  mc.velocity_latent = static_cast<int32_t>(ck.meta_int("model.velocity_latent"));
  mc.species_latent = static_cast<int32_t>(ck.meta_int("model.species_latent"));
  mc.psi_u_hidden = static_cast<int32_t>(ck.meta_int("model.psi_u_hidden"));
  mc.psi_u_side_features = ck.meta_int("model.psi_u_side_features") != 0;
  mc.psi_z_hidden = static_cast<int32_t>(ck.meta_int("model.psi_z_hidden"));
  mc.psi_z_layers = static_cast<int32_t>(ck.meta_int("model.psi_z_layers"));
  mc.psi_z_act = activation_from_name(ck.meta("model.psi_z_act"));
  mc.reaction_features = ck.meta_int("model.reaction_features") != 0;
  mc.feed_initial = ck.meta_int("model.feed_initial") != 0;
  mc.integrator = integrator_from_name(ck.meta("model.integrator"));
  mc.time_scale = ck.meta_double("model.time_scale");

  ModelSet ms(mc, static_cast<uint64_t>(ck.meta_int("seed")));
  ParamRegistry reg = ms.all_params();
  for (const auto& [name, t] : reg.items()) {
    if (!ck.has(name)) fail(ErrorCode::io, "checkpoint is missing parameter " + name);
    const BlobContainer::Entry& e = ck.entry(name);
    if (e.shape != t->shape())
      fail(ErrorCode::io, "checkpoint shape mismatch for " + name);
    t->values() = e.data;
  }
  ms.ae_u.load_norm(ck);
  ms.ae_n0.load_norm(ck);
  ms.ae_np.load_norm(ck);
  ms.ae_k.load_norm(ck);
  ms.psi_u.load_norm(ck);
  return ms;
}

void ModelSet::adopt(ModelSet& other) {
  if (cfg.hidden != other.cfg.hidden || cfg.velocity_latent != other.cfg.velocity_latent ||
      cfg.species_latent != other.cfg.species_latent ||
      cfg.psi_u_hidden != other.cfg.psi_u_hidden ||
      cfg.psi_u_side_features != other.cfg.psi_u_side_features)
    fail(ErrorCode::validation, "adopt requires matching base architecture");

  ParamRegistry dst, src;
  ae_u.collect(dst);
  ae_n0.collect(dst);
  ae_np.collect(dst);
  psi_u.collect(dst);
  other.ae_u.collect(src);
  other.ae_n0.collect(src);
  other.ae_np.collect(src);
  other.psi_u.collect(src);
  if (dst.items().size() != src.items().size())
    fail(ErrorCode::validation, "adopt registries do not line up");
  for (size_t i = 0; i < dst.items().size(); ++i) {
    const auto& [dn, dt] = dst.items()[i];
    const auto& [sn, st] = src.items()[i];
    if (dn != sn || dt->shape() != st->shape())
      fail(ErrorCode::validation, "adopt mismatch at parameter " + dn);
    dt->values() = st->values();
  }

  if (psi_n0.config().extra_width() == other.psi_n0.config().extra_width()) {
    ParamRegistry zd, zs;
    psi_n0.collect(zd);
    psi_np.collect(zd);
    other.psi_n0.collect(zs);
    other.psi_np.collect(zs);
    for (size_t i = 0; i < zd.items().size(); ++i)
      zd.items()[i].second->values() = zs.items()[i].second->values();
  } else {
    psi_n0.adopt_widened(other.psi_n0);
    psi_np.adopt_widened(other.psi_np);
  }

  ae_u.set_norm(other.ae_u.norm_mean(), other.ae_u.norm_std());
  ae_n0.set_norm(other.ae_n0.norm_mean(), other.ae_n0.norm_std());
  ae_np.set_norm(other.ae_np.norm_mean(), other.ae_np.norm_std());
  psi_u.set_norm(other.psi_u.norm_mean(), other.psi_u.norm_std());
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct GeomEntry {
  std::string skeleton;
  GlobalGraph g;
  GeometryBatches gb;
};

struct TrainSample {
  const SampleRecord* rec = nullptr;
  int32_t geom = 0;
  bool val = false;
  FieldSeries fs;
  // Latent caches, refreshed from the current encoders before use.
  std::vector<double> z_u;        // C x velocity_latent
  std::vector<double> psi_in;     // C x psi_u input width, raw
  std::vector<double> z_n0;       // T x (C * species_latent)
  std::vector<double> z_np;
  std::vector<double> z_k;        // C x 2, [k+ latent, k'+ latent]
  std::vector<double> stat;       // C x (velocity_latent + 1)
};

struct TrainerData {
  DatasetManifest manifest;
  std::vector<GeomEntry> geoms;
  std::vector<TrainSample> train;
  std::vector<TrainSample> holdout;
};

std::vector<TrainSample*> all_samples(TrainerData& d) {
  std::vector<TrainSample*> v;
  v.reserve(d.train.size() + d.holdout.size());
  for (TrainSample& s : d.train) v.push_back(&s);
  for (TrainSample& s : d.holdout) v.push_back(&s);
  return v;
}

TrainerData load_data(const TrainConfig& cfg) {
  TrainerData d;
  d.manifest = load_manifest(cfg.manifest);
  std::map<std::string, int32_t> geom_index;
  for (const SampleRecord& r : d.manifest.samples) {
    int32_t gi;
    auto it = geom_index.find(r.skeleton);
    if (it != geom_index.end()) {
      gi = it->second;
    } else {
      fs::path sk = r.skeleton;
      if (!sk.is_absolute() && !fs::exists(sk) && fs::exists(d.manifest.root / sk))
        sk = d.manifest.root / sk;
      GeomEntry e;
      e.skeleton = r.skeleton;
      e.g = build_geometry(load_skeleton(sk), d.manifest.spacing);
      e.gb = make_geometry_batches(e.g);
      d.geoms.push_back(std::move(e));
      gi = static_cast<int32_t>(d.geoms.size()) - 1;
      geom_index.emplace(r.skeleton, gi);
    }
    TrainSample s;
    s.rec = &r;
    s.geom = gi;
    s.fs = load_field_series(d.manifest.sample_path(r));
    if (s.fs.points() != d.geoms[gi].g.total_points)
      fail(ErrorCode::io, "field series does not match its geometry: " + r.file);
    (r.split == "train" ? d.train : d.holdout).push_back(std::move(s));
  }
  if (d.train.empty()) fail(ErrorCode::validation, "manifest has no training samples");

  // Trailing boundary-condition draws per geometry become the validation
  // members. Patterned datasets keep every pattern in training; the held-out
  // pattern already lives in the eval split.
  if (!d.manifest.quadrant_mode && cfg.val_fraction > 0.0) {
    std::map<int32_t, std::vector<size_t>> by_geom;
    for (size_t i = 0; i < d.train.size(); ++i) by_geom[d.train[i].geom].push_back(i);
    for (const auto& [geom, idx] : by_geom) {
      const int64_t n = static_cast<int64_t>(idx.size());
      int64_t n_val = std::lround(static_cast<double>(n) * cfg.val_fraction);
      n_val = std::clamp<int64_t>(n_val, 0, n - 1);
      for (int64_t i = n - n_val; i < n; ++i) d.train[idx[static_cast<size_t>(i)]].val = true;
    }
  }
  return d;
}

std::vector<int64_t> snapshot_indices(int64_t t_count, int32_t stride) {
  if (stride < 1) fail(ErrorCode::validation, "snapshot stride must be positive");
  std::vector<int64_t> idx;
  for (int64_t t = 0; t < t_count; t += stride) idx.push_back(t);
  if (!idx.empty() && idx.back() != t_count - 1) idx.push_back(t_count - 1);
  return idx;
}

std::span<const double> species_row(const TrainSample& s, int species, int64_t t) {
  const int64_t n = s.fs.points();
  const std::vector<double>& f = species == 0 ? s.fs.n0 : s.fs.nplus;
  return {f.data() + t * n, static_cast<size_t>(n)};
}

// ---- Encoder-side helpers ----------------------------------------------

std::vector<double> encode_sections(GraphAutoencoder& ae, const GeomEntry& ge,
                                    std::span<const double> field) {
  return encode_field_sections(ae, ge.gb, ge.g.section_count(), field);
}

std::vector<double> ae_reconstruct(GraphAutoencoder& ae, const GeomEntry& ge,
                                   std::span<const double> field) {
  const std::vector<double> z = encode_field_sections(ae, ge.gb, ge.g.section_count(), field);
  return decode_field_sections(ae, ge.gb, ge.g.total_points, z);
}

void compute_velocity_latents(ModelSet& m, TrainerData& d) {
  const int32_t vl = m.cfg.velocity_latent;
  for (TrainSample* s : all_samples(d)) {
    const GeomEntry& ge = d.geoms[s->geom];
    s->z_u = encode_sections(m.ae_u, ge, s->fs.velocity);
    const int64_t c_count = static_cast<int64_t>(ge.g.section_count());
    s->stat.assign(c_count * (vl + 1), 0.0);
    for (int64_t c = 0; c < c_count; ++c) {
      for (int32_t l = 0; l < vl; ++l) s->stat[c * (vl + 1) + l] = s->z_u[c * vl + l];
      s->stat[c * (vl + 1) + vl] = ge.g.c_feature[c];
    }
  }
}

void compute_species_latents(ModelSet& m, TrainerData& d) {
  const int32_t lat = m.ae_n0.config().latent;
  for (TrainSample* s : all_samples(d)) {
    const GeomEntry& ge = d.geoms[s->geom];
    const int64_t t_count = s->fs.snapshots();
    const int64_t c_count = static_cast<int64_t>(ge.g.section_count());
    s->z_n0.resize(t_count * c_count * lat);
    s->z_np.resize(t_count * c_count * lat);
    for (int64_t t = 0; t < t_count; ++t) {
      std::vector<double> z0 = encode_sections(m.ae_n0, ge, species_row(*s, 0, t));
      std::vector<double> zp = encode_sections(m.ae_np, ge, species_row(*s, 1, t));
      std::copy(z0.begin(), z0.end(), s->z_n0.begin() + t * c_count * lat);
      std::copy(zp.begin(), zp.end(), s->z_np.begin() + t * c_count * lat);
    }
  }
}

void compute_reaction_latents(ModelSet& m, TrainerData& d) {
  for (TrainSample* s : all_samples(d)) {
    const GeomEntry& ge = d.geoms[s->geom];
    const std::vector<double> zk = encode_sections(m.ae_k, ge, s->fs.k_plus);
    const std::vector<double> zkp = encode_sections(m.ae_k, ge, s->fs.k_plus_prime);
    const size_t c_count = ge.g.section_count();
    s->z_k.resize(c_count * 2);
    for (size_t c = 0; c < c_count; ++c) {
      s->z_k[c * 2 + 0] = zk[c];
      s->z_k[c * 2 + 1] = zkp[c];
    }
  }
}

// ---- Chunked batches -----------------------------------------------------

struct AeChunk {
  SectionBatch batch;
  std::vector<double> x;  // normalized rows, (count * p) x channels
};

struct AeChunkBuilder {
  int32_t cap = 0;
  int64_t channels = 0;
  std::vector<AeChunk> chunks;
  AeChunk pipe, bif;

  AeChunkBuilder(int32_t cap_sections, int64_t field_channels)
      : cap(cap_sections), channels(field_channels) {}

  void add(const GeomEntry& ge, int32_t section, const double* rows) {
    AeChunk& c = ge.g.kinds[section] == SectionKind::pipe ? pipe : bif;
    append_section(c.batch, ge.g, section);
    c.x.insert(c.x.end(), rows, rows + static_cast<int64_t>(c.batch.p) * channels);
    if (c.batch.count >= cap) {
      chunks.push_back(std::move(c));
      c = AeChunk{};
    }
  }
  void add_field(const GeomEntry& ge, std::span<const double> field_norm) {
    for (int32_t s = 0; s < static_cast<int32_t>(ge.g.section_count()); ++s)
      add(ge, s, field_norm.data() + ge.g.point_offset[s] * channels);
  }
  void flush() {
    for (AeChunk* c : {&pipe, &bif})
      if (c->batch.count > 0) {
        chunks.push_back(std::move(*c));
        *c = AeChunk{};
      }
  }
};

double ae_sse_epoch(Tape& tape, GraphAutoencoder& ae, std::vector<AeChunk>& chunks, bool grad,
                    int64_t& elems) {
  double sse = 0.0;
  for (AeChunk& c : chunks) {
    tape.reset();
    const int32_t rows = c.batch.count * c.batch.p;
    Tape::Var x = tape.constant(rows, ae.config().channels, c.x);
    Tape::Var y = ae.decode(tape, ae.encode(tape, x, c.batch), c.batch);
    Tape::Var l = tape.sse(y, x);
    sse += tape.scalar(l);
    if (grad) tape.backward(l);
    elems += static_cast<int64_t>(rows) * ae.config().channels;
  }
  return sse;
}

// Teacher-forced one-step pairs, blocked per geometry so every block shares
// the section graph. Targets for the joint stage ride on the species-0 list.
struct PairChunk {
  int32_t geom = 0;
  int32_t blocks = 0;
  std::vector<double> z0, z1;           // (blocks * C) x latent
  std::vector<double> stat;             // (blocks * C) x (velocity_latent + 1)
  std::vector<double> extra;            // (blocks * C) x extra width
  std::vector<double> t_norm, dt_norm;  // per block
  std::vector<double> tgt_pipe, tgt_bif;  // summed species field at t+1
};

void append_extra_rows(std::vector<double>& dst, const TrainSample& s, int species,
                       const PsiZConfig& zc, int64_t c_count) {
  if (zc.extra_width() == 0) return;
  const std::vector<double>& zs = species == 0 ? s.z_n0 : s.z_np;
  for (int64_t c = 0; c < c_count; ++c) {
    if (zc.reaction_features) {
      dst.push_back(s.z_k[c * 2 + 0]);
      dst.push_back(s.z_k[c * 2 + 1]);
    }
    if (zc.feed_initial)
      for (int32_t l = 0; l < zc.latent; ++l) dst.push_back(zs[c * zc.latent + l]);
  }
}

std::vector<PairChunk> build_pair_chunks(TrainerData& d, const std::vector<TrainSample*>& set,
                                         int species, const ModelSet& m, const TrainConfig& cfg,
                                         double time_scale, bool with_targets) {
  const PsiZConfig zc = m.cfg.psi_z_config();
  std::vector<PairChunk> out;
  PairChunk cur;
  int32_t cur_geom = -1;
  auto flush = [&] {
    if (cur.blocks > 0) out.push_back(std::move(cur));
    cur = PairChunk{};
  };
  for (const TrainSample* s : set) {
    const GeomEntry& ge = d.geoms[s->geom];
    const int64_t c_count = static_cast<int64_t>(ge.g.section_count());
    const std::vector<double>& z = species == 0 ? s->z_n0 : s->z_np;
    const int64_t t_count = s->fs.snapshots();
    for (int64_t t = 0; t + 1 < t_count; t += cfg.pair_stride) {
      if (s->geom != cur_geom || cur.blocks >= cfg.chunk_pairs) {
        flush();
        cur_geom = s->geom;
        cur.geom = s->geom;
      }
      const int64_t row = c_count * zc.latent;
      cur.z0.insert(cur.z0.end(), z.begin() + t * row, z.begin() + (t + 1) * row);
      cur.z1.insert(cur.z1.end(), z.begin() + (t + 1) * row, z.begin() + (t + 2) * row);
      cur.stat.insert(cur.stat.end(), s->stat.begin(), s->stat.end());
      append_extra_rows(cur.extra, *s, species, zc, c_count);
      cur.t_norm.push_back(s->fs.times[static_cast<size_t>(t)] / time_scale);
      cur.dt_norm.push_back(
          (s->fs.times[static_cast<size_t>(t + 1)] - s->fs.times[static_cast<size_t>(t)]) /
          time_scale);
      if (with_targets) {
        std::span<const double> a = species_row(*s, 0, t + 1);
        std::span<const double> b = species_row(*s, 1, t + 1);
        auto push_sections = [&](const std::vector<int32_t>& sections, std::vector<double>& tgt) {
          for (int32_t sec : sections) {
            const int64_t off = ge.g.point_offset[sec];
            const int32_t p = ge.g.section_template(sec).p;
            for (int32_t k = 0; k < p; ++k) tgt.push_back(a[off + k] + b[off + k]);
          }
        };
        push_sections(ge.gb.pipe_sections, cur.tgt_pipe);
        push_sections(ge.gb.junction_sections, cur.tgt_bif);
      }
      ++cur.blocks;
    }
  }
  flush();
  return out;
}

double pair_sse_epoch(Tape& tape, TrainerData& d, LatentDynamics& dyn,
                      std::vector<PairChunk>& chunks, Integrator method, bool grad,
                      int64_t& elems) {
  const int32_t lat = dyn.config().latent;
  const int32_t extra_w = dyn.config().extra_width();
  double sse = 0.0;
  for (PairChunk& c : chunks) {
    tape.reset();
    const GeomEntry& ge = d.geoms[c.geom];
    const int32_t c_count = static_cast<int32_t>(ge.g.section_count());
    const int32_t rows = c.blocks * c_count;
    Tape::Var z = tape.constant(rows, lat, c.z0);
    Tape::Var stat = tape.constant(rows, dyn.config().velocity_latent + 1, c.stat);
    Tape::Var extra{};
    if (extra_w > 0) extra = tape.constant(rows, extra_w, c.extra);
    Tape::Var zp = dyn.step(tape, z, stat, extra, c.t_norm, c.dt_norm, c_count, ge.g.a_hat,
                            method);
    Tape::Var l = tape.sse(zp, tape.constant(rows, lat, c.z1));
    sse += tape.scalar(l);
    if (grad) tape.backward(l);
    elems += static_cast<int64_t>(rows) * lat;
  }
  return sse;
}

// Tiled per-kind batches for decoding a block of stacked samples.
struct TiledBatch {
  SectionBatch batch;
  std::vector<int32_t> gather;  // tiled section row -> latent row
};
struct TiledPair {
  TiledBatch pipes, junctions;
};
using TiledCache = std::map<std::pair<int32_t, int32_t>, TiledPair>;

const TiledPair& tiled_for(TiledCache& cache, TrainerData& d, int32_t geom, int32_t blocks) {
  const auto key = std::make_pair(geom, blocks);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const GeomEntry& ge = d.geoms[geom];
  const int32_t c_count = static_cast<int32_t>(ge.g.section_count());
  TiledPair tp;
  for (int32_t b = 0; b < blocks; ++b) {
    for (int32_t sec : ge.gb.pipe_sections) {
      append_section(tp.pipes.batch, ge.g, sec);
      tp.pipes.gather.push_back(b * c_count + sec);
    }
    for (int32_t sec : ge.gb.junction_sections) {
      append_section(tp.junctions.batch, ge.g, sec);
      tp.junctions.gather.push_back(b * c_count + sec);
    }
  }
  return cache.emplace(key, std::move(tp)).first->second;
}

// Joint objective: one-step latent predictions for both species, decoded and
// denormalized on the tape, summed, and matched to the oracle n0 + n+ field.
double joint_sse_epoch(Tape& tape, TrainerData& d, ModelSet& m, std::vector<PairChunk>& cn0,
                       std::vector<PairChunk>& cnp, TiledCache& cache, bool grad,
                       int64_t& elems) {
  if (cn0.size() != cnp.size())
    fail(ErrorCode::validation, "species pair chunks out of step");
  const Integrator method = m.cfg.integrator;
  const int32_t lat = m.ae_n0.config().latent;
  const int32_t extra_w = m.psi_n0.config().extra_width();
  double sse = 0.0;
  for (size_t i = 0; i < cn0.size(); ++i) {
    PairChunk& a = cn0[i];
    PairChunk& b = cnp[i];
    tape.reset();
    const GeomEntry& ge = d.geoms[a.geom];
    const int32_t c_count = static_cast<int32_t>(ge.g.section_count());
    const int32_t rows = a.blocks * c_count;
    const int32_t stat_w = m.psi_n0.config().velocity_latent + 1;

    auto step_of = [&](LatentDynamics& dyn, PairChunk& c) {
      Tape::Var z = tape.constant(rows, lat, c.z0);
      Tape::Var stat = tape.constant(rows, stat_w, c.stat);
      Tape::Var extra{};
      if (extra_w > 0) extra = tape.constant(rows, extra_w, c.extra);
      return dyn.step(tape, z, stat, extra, c.t_norm, c.dt_norm, c_count, ge.g.a_hat, method);
    };
    Tape::Var zp0 = step_of(m.psi_n0, a);
    Tape::Var zpp = step_of(m.psi_np, b);

    const TiledPair& tp = tiled_for(cache, d, a.geom, a.blocks);
    Tape::Var total{};
    auto add_kind = [&](const TiledBatch& tb, const std::vector<double>& tgt) {
      if (tb.batch.count == 0) return;
      auto decode_phys = [&](GraphAutoencoder& ae, Tape::Var zp) {
        Tape::Var zg = tape.row_gather(zp, tb.gather);
        Tape::Var dec = ae.decode(tape, zg, tb.batch);
        const double mean = ae.norm_mean()[0];
        Tape::Var scaled = tape.scale(dec, ae.norm_std()[0]);
        return tape.add_rowvec(scaled, tape.constant(1, 1, std::span<const double>(&mean, 1)));
      };
      Tape::Var sum = tape.add(decode_phys(m.ae_n0, zp0), decode_phys(m.ae_np, zpp));
      Tape::Var l =
          tape.sse(sum, tape.constant(static_cast<int32_t>(tgt.size()), 1, tgt));
      total = total.valid() ? tape.add(total, l) : l;
      elems += static_cast<int64_t>(tgt.size());
    };
    add_kind(tp.pipes, a.tgt_pipe);
    add_kind(tp.junctions, a.tgt_bif);
    sse += tape.scalar(total);
    if (grad) tape.backward(total);
  }
  return sse;
}

// Full-rollout refinement: integrate from t0 and match every recorded latent.
double rollout_sse_epoch(Tape& tape, TrainerData& d, ModelSet& m,
                         const std::vector<TrainSample*>& set, double time_scale, bool grad,
                         int64_t& elems) {
  const PsiZConfig zc = m.cfg.psi_z_config();
  double sse = 0.0;
  for (const TrainSample* s : set) {
    const GeomEntry& ge = d.geoms[s->geom];
    const int32_t c_count = static_cast<int32_t>(ge.g.section_count());
    const int64_t t_count = s->fs.snapshots();
    const int64_t row = static_cast<int64_t>(c_count) * zc.latent;
    for (int species = 0; species < 2; ++species) {
      LatentDynamics& dyn = species == 0 ? m.psi_n0 : m.psi_np;
      const std::vector<double>& zs = species == 0 ? s->z_n0 : s->z_np;
      tape.reset();
      Tape::Var z = tape.constant(c_count, zc.latent, {zs.data(), static_cast<size_t>(row)});
      Tape::Var stat = tape.constant(c_count, zc.velocity_latent + 1, s->stat);
      Tape::Var extra{};
      std::vector<double> extra_rows;
      if (zc.extra_width() > 0) {
        append_extra_rows(extra_rows, *s, species, zc, c_count);
        extra = tape.constant(c_count, zc.extra_width(), extra_rows);
      }
      Tape::Var total{};
      for (int64_t t = 0; t + 1 < t_count; ++t) {
        const std::vector<double> tn = {s->fs.times[static_cast<size_t>(t)] / time_scale};
        const std::vector<double> dtn = {
            (s->fs.times[static_cast<size_t>(t + 1)] - s->fs.times[static_cast<size_t>(t)]) /
            time_scale};
        z = dyn.step(tape, z, stat, extra, tn, dtn, c_count, ge.g.a_hat, m.cfg.integrator);
        Tape::Var ref = tape.constant(c_count, zc.latent,
                                      {zs.data() + (t + 1) * row, static_cast<size_t>(row)});
        Tape::Var l = tape.sse(z, ref);
        total = total.valid() ? tape.add(total, l) : l;
      }
      sse += tape.scalar(total);
      if (grad) tape.backward(total);
      elems += (t_count - 1) * row;
    }
  }
  return sse;
}

// ---- Epoch loop ----------------------------------------------------------

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

void scale_grads(ParamRegistry& reg, double s) {
  for (Tensor* t : reg.tensors())
    for (double& g : t->grad()) g *= s;
}

using EpochObserver = std::function<void(int32_t epoch, double stop_value)>;

PhaseReport run_phase(const std::string& name, const fs::path& dir, const std::string& csv_name,
                      int32_t max_epochs, const TrainConfig& cfg, ParamRegistry reg,
                      const std::function<double()>& train_fn,
                      const std::function<double()>& val_fn,
                      const EpochObserver& observer = {}) {
  fs::create_directories(dir);
  std::ofstream csv(dir / csv_name, std::ios::trunc);
  if (!csv) fail(ErrorCode::io, "cannot write " + (dir / csv_name).string());
  csv << "epoch,train_mse,val_mse\n";

  Adam adam(reg.tensors(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  std::vector<double> history;
  const auto start = std::chrono::steady_clock::now();
  PhaseReport rep;
  rep.name = name;
  for (int32_t epoch = 1; epoch <= max_epochs; ++epoch) {
    reg.zero_grad();
    const double tr = train_fn();
    if (!std::isfinite(tr)) fail(ErrorCode::numeric, name + ": training loss is not finite");
    adam.step();
    const double va = val_fn ? val_fn() : kNan;
    csv << epoch << ',' << fmt_g(tr) << ',';
    if (std::isfinite(va)) csv << fmt_g(va);
    csv << '\n';
    const double stop_value = std::isfinite(va) ? va : tr;
    history.push_back(stop_value);
    rep.epochs = epoch;
    rep.train_loss = tr;
    rep.val_loss = stop_value;
    if (observer) observer(epoch, stop_value);
    // Stop when the monitored loss has improved by less than the threshold
    // over the whole window.
    if (epoch > cfg.early_stop_window) {
      const double gain = history[static_cast<size_t>(epoch - 1 - cfg.early_stop_window)] -
                          stop_value;
      if (gain < cfg.early_stop_delta) break;
    }
  }
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

// ---- Gate metrics --------------------------------------------------------

struct GateMetrics {
  double velocity = kNan;
  double psi_u = kNan;
  double concentration = kNan;
};

GateMetrics read_metrics(const Checkpoint& ck) {
  GateMetrics m;
  if (ck.has_meta("metric.velocity_ae_mre")) m.velocity = ck.meta_double("metric.velocity_ae_mre");
  if (ck.has_meta("metric.psi_u_mre")) m.psi_u = ck.meta_double("metric.psi_u_mre");
  if (ck.has_meta("metric.concentration_ae_mre"))
    m.concentration = ck.meta_double("metric.concentration_ae_mre");
  return m;
}

std::vector<TrainSample*> gate_set(TrainerData& d) {
  std::vector<TrainSample*> v;
  for (TrainSample& s : d.train)
    if (s.val) v.push_back(&s);
  if (v.empty())
    for (TrainSample& s : d.holdout) v.push_back(&s);
  if (v.empty())
    for (TrainSample& s : d.train) v.push_back(&s);
  return v;
}

double velocity_gate(ModelSet& m, TrainerData& d) {
  double sum = 0.0;
  int n = 0;
  for (TrainSample* s : gate_set(d)) {
    const GeomEntry& ge = d.geoms[s->geom];
    const std::vector<double> rec = ae_reconstruct(m.ae_u, ge, s->fs.velocity);
    sum += vector_grouped_error(rec, s->fs.velocity, 3, section_bounds(ge.g)).mre;
    ++n;
  }
  return sum / n;
}

double psi_u_gate(ModelSet& m, TrainerData& d) {
  double sum = 0.0;
  int n = 0;
  Tape tape;
  for (TrainSample* s : gate_set(d)) {
    tape.reset();
    const std::vector<double> in = m.psi_u.normalize(s->psi_in);
    const int32_t rows = static_cast<int32_t>(d.geoms[s->geom].g.section_count());
    Tape::Var p = m.psi_u.forward(tape, tape.constant(rows, m.psi_u.input_width(), in));
    std::span<const double> pv = tape.value(p);
    std::vector<int64_t> rows_bounds(static_cast<size_t>(rows) + 1);
    for (int32_t r = 0; r <= rows; ++r) rows_bounds[static_cast<size_t>(r)] = r;
    sum += vector_grouped_error(pv, s->z_u, m.cfg.velocity_latent, rows_bounds).mre;
    ++n;
  }
  return sum / n;
}

double concentration_gate(ModelSet& m, TrainerData& d, const TrainConfig& cfg) {
  double sum = 0.0;
  int64_t n = 0;
  for (TrainSample* s : gate_set(d)) {
    const GeomEntry& ge = d.geoms[s->geom];
    const std::vector<int64_t> bounds = section_bounds(ge.g);
    for (int64_t t : snapshot_indices(s->fs.snapshots(), cfg.snapshot_stride)) {
      for (int species = 0; species < 2; ++species) {
        GraphAutoencoder& ae = species == 0 ? m.ae_n0 : m.ae_np;
        std::span<const double> row = species_row(*s, species, t);
        const std::vector<double> rec = ae_reconstruct(ae, ge, row);
        sum += scalar_grouped_error(rec, row, bounds).mre;
        ++n;
      }
    }
  }
  return sum / static_cast<double>(n);
}

// ---- Checkpoint plumbing -------------------------------------------------

fs::path phase_dir(const TrainConfig& cfg, int32_t phase) {
  return cfg.out_dir / ("phase" + std::to_string(phase));
}

fs::path save_phase_checkpoint(ModelSet& m, const TrainConfig& cfg, int32_t phase,
                               const GateMetrics& metrics) {
  Checkpoint ck;
  m.save_into(ck);
  ck.set_meta_int("phase", phase);
  if (std::isfinite(metrics.velocity))
    ck.set_meta_double("metric.velocity_ae_mre", metrics.velocity);
  if (std::isfinite(metrics.psi_u)) ck.set_meta_double("metric.psi_u_mre", metrics.psi_u);
  if (std::isfinite(metrics.concentration))
    ck.set_meta_double("metric.concentration_ae_mre", metrics.concentration);
  const fs::path dir = phase_dir(cfg, phase);
  fs::create_directories(dir);
  const fs::path path = dir / "model.ckpt";
  save_checkpoint(ck, path);
  return path;
}

std::vector<std::vector<double>> snap_params(ParamRegistry& reg) {
  std::vector<std::vector<double>> s;
  for (Tensor* t : reg.tensors()) s.push_back(t->values());
  return s;
}

void restore_params(ParamRegistry& reg, const std::vector<std::vector<double>>& s) {
  const std::vector<Tensor*> ts = reg.tensors();
  for (size_t i = 0; i < ts.size(); ++i) ts[i]->values() = s[i];
}

std::vector<TrainSample*> subset(TrainerData& d, bool val_members) {
  std::vector<TrainSample*> v;
  for (TrainSample& s : d.train)
    if (s.val == val_members) v.push_back(&s);
  return v;
}

// ---- The two training drivers ---------------------------------------------

TrainReport run_standard(const TrainConfig& cfg) {
  TrainerData data = load_data(cfg);
  fs::create_directories(cfg.out_dir);

  TrainReport report;
  GateMetrics metrics;
  int32_t done = 0;
  std::optional<ModelSet> holder;
  if (!cfg.base_checkpoint.empty()) {
    Checkpoint ck = load_checkpoint(cfg.base_checkpoint);
    holder.emplace(ModelSet::from_checkpoint(ck));
    if (ck.has_meta("phase")) done = static_cast<int32_t>(ck.meta_int("phase"));
    metrics = read_metrics(ck);
  } else {
    holder.emplace(cfg.model, cfg.seed);
  }
  ModelSet& m = *holder;

  auto ensure_phase = [&](int32_t k) {
    if (done >= k - 1) return;
    const fs::path p = phase_dir(cfg, k - 1) / "model.ckpt";
    if (fs::exists(p)) {
      Checkpoint ck = load_checkpoint(p);
      m = ModelSet::from_checkpoint(ck);
      done = static_cast<int32_t>(ck.meta_int("phase"));
      metrics = read_metrics(ck);
    }
    if (done < k - 1)
      fail(ErrorCode::validation, "phase " + std::to_string(k) + " requires phase " +
                                      std::to_string(k - 1) + " to run first");
  };

  const std::vector<TrainSample*> fit_set = subset(data, false);
  const std::vector<TrainSample*> val_set = subset(data, true);
  if (fit_set.empty()) fail(ErrorCode::validation, "no non-validation training samples");

  if (cfg.phase1) {
    std::vector<double> rows;
    for (const TrainSample* s : fit_set)
      rows.insert(rows.end(), s->fs.velocity.begin(), s->fs.velocity.end());
    std::vector<double> mean, dev;
    compute_norm_stats(rows, 3, mean, dev);
    m.ae_u.set_norm(mean, dev);

    AeChunkBuilder tb{cfg.chunk_sections, 3}, vb{cfg.chunk_sections, 3};
    for (TrainSample& s : data.train) {
      const std::vector<double> norm = m.ae_u.normalize(s.fs.velocity);
      (s.val ? vb : tb).add_field(data.geoms[s.geom], norm);
    }
    tb.flush();
    vb.flush();

    ParamRegistry reg;
    m.ae_u.collect(reg);
    Tape tape;
    auto train_fn = [&] {
      int64_t e = 0;
      const double sse = ae_sse_epoch(tape, m.ae_u, tb.chunks, true, e);
      scale_grads(reg, 1.0 / static_cast<double>(e));
      return sse / static_cast<double>(e);
    };
    std::function<double()> val_fn;
    if (!vb.chunks.empty())
      val_fn = [&] {
        int64_t e = 0;
        return ae_sse_epoch(tape, m.ae_u, vb.chunks, false, e) / static_cast<double>(e);
      };
    report.phases.push_back(run_phase("phase1", phase_dir(cfg, 1), "loss.csv",
                                      cfg.epochs_phase1, cfg, reg, train_fn, val_fn));
    metrics.velocity = velocity_gate(m, data);
    report.final_checkpoint = save_phase_checkpoint(m, cfg, 1, metrics);
    done = std::max(done, 1);
  }

  if (cfg.phase2) {
    ensure_phase(2);
    compute_velocity_latents(m, data);
    for (TrainSample* s : all_samples(data))
      s->psi_in = m.psi_u.build_inputs(data.geoms[s->geom].g, s->fs.u1d);

    const int32_t w = m.psi_u.input_width();
    const int32_t vl = m.cfg.velocity_latent;
    std::vector<double> rows;
    for (const TrainSample* s : fit_set) rows.insert(rows.end(), s->psi_in.begin(), s->psi_in.end());
    std::vector<double> mean, dev;
    compute_norm_stats(rows, w, mean, dev);
    m.psi_u.set_norm(mean, dev);

    std::vector<double> xt, zt, xv, zv;
    for (TrainSample& s : data.train) {
      const std::vector<double> in = m.psi_u.normalize(s.psi_in);
      auto& x = s.val ? xv : xt;
      auto& z = s.val ? zv : zt;
      x.insert(x.end(), in.begin(), in.end());
      z.insert(z.end(), s.z_u.begin(), s.z_u.end());
    }
    const int32_t rt = static_cast<int32_t>(xt.size() / w);
    const int32_t rv = static_cast<int32_t>(xv.size() / w);
    const double elems = static_cast<double>(rt) * vl;

    ParamRegistry reg;
    m.psi_u.collect(reg);
    Tape tape;
    auto train_fn = [&] {
      tape.reset();
      Tape::Var p = m.psi_u.forward(tape, tape.constant(rt, w, xt));
      Tape::Var l = tape.sse(p, tape.constant(rt, vl, zt));
      const double sse = tape.scalar(l);
      tape.backward(l);
      scale_grads(reg, 1.0 / elems);
      return sse / elems;
    };
    std::function<double()> val_fn;
    if (rv > 0)
      val_fn = [&] {
        tape.reset();
        Tape::Var p = m.psi_u.forward(tape, tape.constant(rv, w, xv));
        return tape.scalar(tape.sse(p, tape.constant(rv, vl, zv))) /
               (static_cast<double>(rv) * vl);
      };
    report.phases.push_back(run_phase("phase2", phase_dir(cfg, 2), "loss.csv",
                                      cfg.epochs_phase2, cfg, reg, train_fn, val_fn));
    metrics.psi_u = psi_u_gate(m, data);
    report.final_checkpoint = save_phase_checkpoint(m, cfg, 2, metrics);
    done = std::max(done, 2);
  }

  if (cfg.phase3) {
    ensure_phase(3);
    AeChunkBuilder builders[4] = {{cfg.chunk_sections, 1},
                                  {cfg.chunk_sections, 1},
                                  {cfg.chunk_sections, 1},
                                  {cfg.chunk_sections, 1}};
    AeChunkBuilder& t0 = builders[0];
    AeChunkBuilder& v0 = builders[1];
    AeChunkBuilder& tp = builders[2];
    AeChunkBuilder& vp = builders[3];

    for (int species = 0; species < 2; ++species) {
      std::vector<double> rows;
      for (const TrainSample* s : fit_set)
        for (int64_t t : snapshot_indices(s->fs.snapshots(), cfg.snapshot_stride)) {
          std::span<const double> r = species_row(*s, species, t);
          rows.insert(rows.end(), r.begin(), r.end());
        }
      std::vector<double> mean, dev;
      compute_norm_stats(rows, 1, mean, dev);
      (species == 0 ? m.ae_n0 : m.ae_np).set_norm(mean, dev);
    }
    for (TrainSample& s : data.train) {
      const GeomEntry& ge = data.geoms[s.geom];
      for (int64_t t : snapshot_indices(s.fs.snapshots(), cfg.snapshot_stride)) {
        (s.val ? v0 : t0).add_field(ge, m.ae_n0.normalize(species_row(s, 0, t)));
        (s.val ? vp : tp).add_field(ge, m.ae_np.normalize(species_row(s, 1, t)));
      }
    }
    for (AeChunkBuilder& b : builders) b.flush();

    ParamRegistry reg;
    m.ae_n0.collect(reg);
    m.ae_np.collect(reg);
    Tape tape;
    auto train_fn = [&] {
      int64_t e = 0;
      double sse = ae_sse_epoch(tape, m.ae_n0, t0.chunks, true, e);
      sse += ae_sse_epoch(tape, m.ae_np, tp.chunks, true, e);
      scale_grads(reg, 1.0 / static_cast<double>(e));
      return sse / static_cast<double>(e);
    };
    std::function<double()> val_fn;
    if (!v0.chunks.empty() || !vp.chunks.empty())
      val_fn = [&] {
        int64_t e = 0;
        double sse = ae_sse_epoch(tape, m.ae_n0, v0.chunks, false, e);
        sse += ae_sse_epoch(tape, m.ae_np, vp.chunks, false, e);
        return sse / static_cast<double>(e);
      };
    report.phases.push_back(run_phase("phase3", phase_dir(cfg, 3), "loss.csv",
                                      cfg.epochs_phase3, cfg, reg, train_fn, val_fn));
    metrics.concentration = concentration_gate(m, data, cfg);
    report.final_checkpoint = save_phase_checkpoint(m, cfg, 3, metrics);
    done = std::max(done, 3);
  }

  if (cfg.phase4) {
    ensure_phase(4);
    compute_velocity_latents(m, data);
    compute_species_latents(m, data);
    if (m.cfg.reaction_features) compute_reaction_latents(m, data);
    const double ts = m.cfg.time_scale;

    std::vector<TrainSample*> hold_set;
    for (TrainSample& s : data.holdout) hold_set.push_back(&s);

    std::vector<PairChunk> tr_n0 = build_pair_chunks(data, fit_set, 0, m, cfg, ts, true);
    if (tr_n0.empty())
      fail(ErrorCode::validation, "dynamics training needs at least two snapshots per sample");
    std::vector<PairChunk> tr_np = build_pair_chunks(data, fit_set, 1, m, cfg, ts, false);
    std::vector<PairChunk> va_n0 = build_pair_chunks(data, val_set, 0, m, cfg, ts, true);
    std::vector<PairChunk> va_np = build_pair_chunks(data, val_set, 1, m, cfg, ts, false);
    std::vector<PairChunk> ho_n0 = build_pair_chunks(data, hold_set, 0, m, cfg, ts, true);
    std::vector<PairChunk> ho_np = build_pair_chunks(data, hold_set, 1, m, cfg, ts, false);

    Tape tape;
    const fs::path dir = phase_dir(cfg, 4);

    for (int species = 0; species < 2; ++species) {
      LatentDynamics& dyn = species == 0 ? m.psi_n0 : m.psi_np;
      std::vector<PairChunk>& trc = species == 0 ? tr_n0 : tr_np;
      std::vector<PairChunk>& vac = species == 0 ? va_n0 : va_np;
      ParamRegistry reg;
      dyn.collect(reg);
      auto train_fn = [&] {
        int64_t e = 0;
        const double sse = pair_sse_epoch(tape, data, dyn, trc, m.cfg.integrator, true, e);
        scale_grads(reg, 1.0 / static_cast<double>(e));
        return sse / static_cast<double>(e);
      };
      std::function<double()> val_fn;
      if (!vac.empty())
        val_fn = [&] {
          int64_t e = 0;
          return pair_sse_epoch(tape, data, dyn, vac, m.cfg.integrator, false, e) /
                 static_cast<double>(e);
        };
      const char* name = species == 0 ? "phase4_n0" : "phase4_nplus";
      const char* csv = species == 0 ? "loss_n0.csv" : "loss_nplus.csv";
      report.phases.push_back(
          run_phase(name, dir, csv, cfg.epochs_phase4, cfg, reg, train_fn, val_fn));
    }

    if (cfg.rollout_finetune && cfg.epochs_rollout > 0) {
      ParamRegistry reg;
      m.psi_n0.collect(reg);
      m.psi_np.collect(reg);
      auto train_fn = [&] {
        int64_t e = 0;
        const double sse = rollout_sse_epoch(tape, data, m, fit_set, ts, true, e);
        scale_grads(reg, 1.0 / static_cast<double>(e));
        return sse / static_cast<double>(e);
      };
      std::function<double()> val_fn;
      if (!val_set.empty())
        val_fn = [&] {
          int64_t e = 0;
          return rollout_sse_epoch(tape, data, m, val_set, ts, false, e) /
                 static_cast<double>(e);
        };
      report.phases.push_back(run_phase("phase4_rollout", dir, "loss_rollout.csv",
                                        cfg.epochs_rollout, cfg, reg, train_fn, val_fn));
    }

    // Joint refinement of the dynamics and the concentration decoders against
    // the summed physical field.
    TiledCache cache;
    ParamRegistry reg;
    m.psi_n0.collect(reg);
    m.psi_np.collect(reg);
    m.ae_n0.collect_decoders(reg);
    m.ae_np.collect_decoders(reg);

    auto loss_over = [&](std::vector<PairChunk>& a, std::vector<PairChunk>& b) {
      int64_t e = 0;
      const double sse = joint_sse_epoch(tape, data, m, a, b, cache, false, e);
      return e > 0 ? sse / static_cast<double>(e) : kNan;
    };
    auto eval_fn = [&]() -> double {
      if (!ho_n0.empty()) return loss_over(ho_n0, ho_np);
      if (!va_n0.empty()) return loss_over(va_n0, va_np);
      return loss_over(tr_n0, tr_np);
    };
    report.joint_val_before = eval_fn();

    auto train_fn = [&] {
      int64_t e = 0;
      const double sse = joint_sse_epoch(tape, data, m, tr_n0, tr_np, cache, true, e);
      scale_grads(reg, 1.0 / static_cast<double>(e));
      return sse / static_cast<double>(e);
    };
    std::function<double()> val_fn;
    if (!ho_n0.empty() || !va_n0.empty()) val_fn = eval_fn;

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_state;
    auto observer = [&](int32_t, double stop_value) {
      if (stop_value < best) {
        best = stop_value;
        best_state = snap_params(reg);
      }
    };
    if (cfg.epochs_joint > 0) {
      report.phases.push_back(run_phase("phase4_joint", dir, "loss.csv", cfg.epochs_joint, cfg,
                                        reg, train_fn, val_fn, observer));
      if (!best_state.empty()) restore_params(reg, best_state);
    } else {
      // Keep the layout contract even when the joint stage is disabled.
      fs::create_directories(dir);
      std::ofstream csv(dir / "loss.csv", std::ios::trunc);
      csv << "epoch,train_mse,val_mse\n";
    }
    report.joint_val_after = eval_fn();

    report.final_checkpoint = save_phase_checkpoint(m, cfg, 4, metrics);
    done = std::max(done, 4);
  }

  if (std::isfinite(metrics.velocity)) report.velocity_ae_mre = metrics.velocity;
  if (std::isfinite(metrics.psi_u)) report.psi_u_mre = metrics.psi_u;
  if (std::isfinite(metrics.concentration)) report.concentration_ae_mre = metrics.concentration;
  return report;
}

TrainReport run_case2(const TrainConfig& cfg) {
  if (cfg.base_checkpoint.empty())
    fail(ErrorCode::validation, "patterned fine-tune requires base_checkpoint");
  Checkpoint bck = load_checkpoint(cfg.base_checkpoint);
  if (!bck.has_meta("phase") || bck.meta_int("phase") < 4)
    fail(ErrorCode::validation, "patterned fine-tune requires a fully trained base checkpoint");
  ModelSet base = ModelSet::from_checkpoint(bck);

  // The base architecture is authoritative; this run only turns on the
  // reaction features.
  ModelConfig mc = base.cfg;
  mc.reaction_features = true;
  mc.feed_initial = cfg.model.feed_initial;
  ModelSet m(mc, cfg.seed);
  m.adopt(base);

  TrainerData data = load_data(cfg);
  fs::create_directories(cfg.out_dir);
  TrainReport report;
  GateMetrics metrics = read_metrics(bck);
  const std::vector<TrainSample*> fit_set = subset(data, false);
  if (fit_set.empty()) fail(ErrorCode::validation, "no training samples");

  // Stage 1: the rate-field autoencoder, both channels through one model.
  {
    std::vector<double> rows;
    for (const TrainSample* s : fit_set) {
      rows.insert(rows.end(), s->fs.k_plus.begin(), s->fs.k_plus.end());
      rows.insert(rows.end(), s->fs.k_plus_prime.begin(), s->fs.k_plus_prime.end());
    }
    std::vector<double> mean, dev;
    compute_norm_stats(rows, 1, mean, dev);
    m.ae_k.set_norm(mean, dev);

    AeChunkBuilder tb{cfg.chunk_sections, 1};
    for (const TrainSample* s : fit_set) {
      const GeomEntry& ge = data.geoms[s->geom];
      tb.add_field(ge, m.ae_k.normalize(s->fs.k_plus));
      tb.add_field(ge, m.ae_k.normalize(s->fs.k_plus_prime));
    }
    tb.flush();

    ParamRegistry reg;
    m.ae_k.collect(reg);
    Tape tape;
    auto train_fn = [&] {
      int64_t e = 0;
      const double sse = ae_sse_epoch(tape, m.ae_k, tb.chunks, true, e);
      scale_grads(reg, 1.0 / static_cast<double>(e));
      return sse / static_cast<double>(e);
    };
    report.phases.push_back(run_phase("phase5_rate_ae", phase_dir(cfg, 5), "loss.csv",
                                      cfg.epochs_phase3, cfg, reg, train_fn, {}));
    report.final_checkpoint = save_phase_checkpoint(m, cfg, 5, metrics);
  }

  // Stage 2: joint fine-tune of the dynamics and the concentration decoders
  // with the rate latents as extra features. The held-out pattern is never
  // touched here; stopping tracks the training loss.
  {
    compute_velocity_latents(m, data);
    compute_species_latents(m, data);
    compute_reaction_latents(m, data);
    const double ts = m.cfg.time_scale;

    std::vector<PairChunk> tr_n0 = build_pair_chunks(data, fit_set, 0, m, cfg, ts, true);
    if (tr_n0.empty())
      fail(ErrorCode::validation, "dynamics training needs at least two snapshots per sample");
    std::vector<PairChunk> tr_np = build_pair_chunks(data, fit_set, 1, m, cfg, ts, false);

    Tape tape;
    TiledCache cache;
    ParamRegistry reg;
    m.psi_n0.collect(reg);
    m.psi_np.collect(reg);
    m.ae_n0.collect_decoders(reg);
    m.ae_np.collect_decoders(reg);

    auto loss_now = [&] {
      int64_t e = 0;
      const double sse = joint_sse_epoch(tape, data, m, tr_n0, tr_np, cache, false, e);
      return sse / static_cast<double>(e);
    };
    report.joint_val_before = loss_now();

    auto train_fn = [&] {
      int64_t e = 0;
      const double sse = joint_sse_epoch(tape, data, m, tr_n0, tr_np, cache, true, e);
      scale_grads(reg, 1.0 / static_cast<double>(e));
      return sse / static_cast<double>(e);
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> best_state;
    auto observer = [&](int32_t, double stop_value) {
      if (stop_value < best) {
        best = stop_value;
        best_state = snap_params(reg);
      }
    };
    report.phases.push_back(run_phase("phase6_joint", phase_dir(cfg, 6), "loss.csv",
                                      cfg.epochs_joint, cfg, reg, train_fn, {}, observer));
    if (!best_state.empty()) restore_params(reg, best_state);
    report.joint_val_after = loss_now();

    report.final_checkpoint = save_phase_checkpoint(m, cfg, 6, metrics);
  }

  if (std::isfinite(metrics.velocity)) report.velocity_ae_mre = metrics.velocity;
  if (std::isfinite(metrics.psi_u)) report.psi_u_mre = metrics.psi_u;
  if (std::isfinite(metrics.concentration)) report.concentration_ae_mre = metrics.concentration;
  return report;
}

}  // namespace

TrainReport train(const TrainConfig& cfg) {
  if (cfg.manifest.empty()) fail(ErrorCode::validation, "training requires a dataset manifest");
  if (cfg.out_dir.empty()) fail(ErrorCode::validation, "training requires an output directory");
  return cfg.case2 ? run_case2(cfg) : run_standard(cfg);
}

void verify_gates(const Checkpoint& ck, const InferenceGates& gates) {
  const struct {
    const char* key;
    double limit;
    const char* what;
  } rows[] = {
      {"metric.velocity_ae_mre", gates.velocity_ae_mre, "velocity autoencoder"},
      {"metric.psi_u_mre", gates.psi_u_mre, "velocity latent transform"},
      {"metric.concentration_ae_mre", gates.concentration_ae_mre, "concentration autoencoders"},
  };
  for (const auto& r : rows) {
    if (!ck.has_meta(r.key))
      fail(ErrorCode::gate,
           std::string(r.what) + ": checkpoint has no recorded validation error");
    const double v = ck.meta_double(r.key);
    if (!(v <= r.limit))
      fail(ErrorCode::gate, std::string(r.what) + " gate failed: validation MRE " + fmt_g(v) +
                                "% exceeds " + fmt_g(r.limit) + "%");
  }
}

}  // namespace galds
