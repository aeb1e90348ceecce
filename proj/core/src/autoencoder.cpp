#include "galds/autoencoder.hpp"

#include <cmath>

#include "galds/error.hpp"
#include "galds/templates.hpp"

namespace galds {

void append_section(SectionBatch& b, const GlobalGraph& g, int32_t section, int32_t point_base) {
  const TemplateGraph& tpl = g.section_template(section);
  const SectionKind kind = g.kinds[section];
  if (b.count == 0) {
    b.kind = kind;
    b.p = tpl.p;
    if (kind == SectionKind::pipe) b.shared_adj = &tpl.a_hat;
  } else if (b.kind != kind) {
    fail(ErrorCode::validation, "mixed section kinds in one batch");
  }
  if (kind == SectionKind::bifurcation) b.adjacencies.push_back(&tpl.a_hat);
  std::vector<double> coords;
  template_local_coords(tpl, coords);
  b.coords.insert(b.coords.end(), coords.begin(), coords.end());
  for (int32_t k = 0; k < tpl.p; ++k)
    b.point_index.push_back(point_base + static_cast<int32_t>(g.point_offset[section]) + k);
  ++b.count;
}

GeometryBatches make_geometry_batches(const GlobalGraph& g) {
  GeometryBatches gb;
  for (int32_t s = 0; s < static_cast<int32_t>(g.section_count()); ++s) {
    if (g.kinds[s] == SectionKind::pipe) {
      append_section(gb.pipes, g, s);
      gb.pipe_sections.push_back(s);
    } else {
      append_section(gb.junctions, g, s);
      gb.junction_sections.push_back(s);
    }
  }
  gb.to_section_order.resize(g.section_count());
  for (size_t i = 0; i < gb.pipe_sections.size(); ++i)
    gb.to_section_order[gb.pipe_sections[i]] = static_cast<int32_t>(i);
  for (size_t j = 0; j < gb.junction_sections.size(); ++j)
    gb.to_section_order[gb.junction_sections[j]] =
        static_cast<int32_t>(gb.pipe_sections.size() + j);
  return gb;
}

std::vector<double> gather_rows(std::span<const double> field, int64_t channels,
                                const std::vector<int32_t>& point_index) {
  std::vector<double> out(point_index.size() * channels);
  for (size_t r = 0; r < point_index.size(); ++r) {
    const double* src = field.data() + static_cast<size_t>(point_index[r]) * channels;
    std::copy(src, src + channels, out.begin() + r * channels);
  }
  return out;
}

GraphAutoencoder::GraphAutoencoder(std::string prefix, const AeConfig& cfg, Rng& rng)
    : prefix_(std::move(prefix)), cfg_(cfg) {
  if (cfg.channels < 1 || cfg.latent < 1 || cfg.hidden < 1)
    fail(ErrorCode::validation, "autoencoder dimensions must be positive");
  const int32_t h = cfg.hidden;
  enc_gc_.emplace_back(cfg.channels + 3, h, Activation::relu, rng);
  for (int i = 0; i < 3; ++i) enc_gc_.emplace_back(h, h, Activation::relu, rng);
  enc_ff_ = DenseLayer(h, cfg.latent, Activation::linear, rng);

  for (Decoder* d : {&dec_pipe_, &dec_junction_}) {
    d->ff = DenseLayer(cfg.latent, h, Activation::relu, rng);
    d->gc.emplace_back(h + 3, h, Activation::relu, rng);
    for (int i = 0; i < 2; ++i) d->gc.emplace_back(h, h, Activation::relu, rng);
    d->gc.emplace_back(h, cfg.channels, Activation::linear, rng);
  }
  norm_mean_.assign(cfg.channels, 0.0);
  norm_std_.assign(cfg.channels, 1.0);
}

Tape::Var GraphAutoencoder::encode(Tape& tape, Tape::Var x, const SectionBatch& b) {
  if (x.cols != cfg_.channels) fail(ErrorCode::validation, "encode channel mismatch");
  // Static polar coordinates ride along with the field values so that latents
  // can distinguish a pattern from its rotated copy; pooling alone cannot.
  Tape::Var coords = tape.constant(b.count * b.p, 3, b.coords);
  std::array<Tape::Var, 2> enc_parts = {x, coords};
  Tape::Var h = tape.concat_cols(enc_parts);
  for (GconvLayer& layer : enc_gc_) {
    h = (b.kind == SectionKind::pipe) ? layer.forward_dense(tape, h, *b.shared_adj, b.p)
                                      : layer.forward_multi(tape, h, b.adjacencies, b.p);
  }
  Tape::Var pooled = tape.mean_rows_blocks(h, b.p);
  return enc_ff_.forward(tape, pooled);
}

Tape::Var GraphAutoencoder::decode(Tape& tape, Tape::Var z, const SectionBatch& b) {
  return decode_with(tape, b.kind == SectionKind::pipe ? dec_pipe_ : dec_junction_, z, b);
}

Tape::Var GraphAutoencoder::decode_with(Tape& tape, Decoder& dec, Tape::Var z,
                                        const SectionBatch& b) {
  if (z.cols != cfg_.latent) fail(ErrorCode::validation, "decode latent mismatch");
  if (z.rows != b.count) fail(ErrorCode::validation, "decode batch size mismatch");
  Tape::Var h = tape.repeat_rows_blocks(dec.ff.forward(tape, z), b.p);
  Tape::Var coords = tape.constant(b.count * b.p, 3, b.coords);
  std::array<Tape::Var, 2> parts = {h, coords};
  h = tape.concat_cols(parts);
  for (GconvLayer& layer : dec.gc) {
    h = (b.kind == SectionKind::pipe) ? layer.forward_dense(tape, h, *b.shared_adj, b.p)
                                      : layer.forward_multi(tape, h, b.adjacencies, b.p);
  }
  return h;
}

void GraphAutoencoder::collect(ParamRegistry& reg) {
  collect_encoder(reg);
  collect_decoders(reg);
}

void GraphAutoencoder::collect_encoder(ParamRegistry& reg) {
  for (size_t i = 0; i < enc_gc_.size(); ++i)
    reg.add_layer(prefix_ + ".enc.shared.g" + std::to_string(i), enc_gc_[i]);
  reg.add_layer(prefix_ + ".enc.shared.ff", enc_ff_);
}

void GraphAutoencoder::collect_decoder(ParamRegistry& reg, const std::string& name,
                                       Decoder& dec) {
  reg.add_layer(prefix_ + ".dec." + name + ".ff", dec.ff);
  for (size_t i = 0; i < dec.gc.size(); ++i)
    reg.add_layer(prefix_ + ".dec." + name + ".g" + std::to_string(i), dec.gc[i]);
}

void GraphAutoencoder::collect_decoders(ParamRegistry& reg) {
  collect_decoder(reg, "pipe", dec_pipe_);
  collect_decoder(reg, "bif", dec_junction_);
}

void GraphAutoencoder::set_norm(std::vector<double> mean, std::vector<double> stdev) {
  if (static_cast<int32_t>(mean.size()) != cfg_.channels ||
      static_cast<int32_t>(stdev.size()) != cfg_.channels)
    fail(ErrorCode::validation, "normalization stats must match channel count");
  for (double s : stdev)
    if (!(s > 0.0)) fail(ErrorCode::validation, "normalization scale must be positive");
  norm_mean_ = std::move(mean);
  norm_std_ = std::move(stdev);
}

std::vector<double> GraphAutoencoder::normalize(std::span<const double> x) const {
  const int64_t c = cfg_.channels;
  std::vector<double> out(x.begin(), x.end());
  for (size_t i = 0; i < out.size(); ++i) {
    const int64_t ch = static_cast<int64_t>(i) % c;
    out[i] = (out[i] - norm_mean_[ch]) / norm_std_[ch];
  }
  return out;
}

void GraphAutoencoder::denormalize(std::vector<double>& x) const {
  const int64_t c = cfg_.channels;
  for (size_t i = 0; i < x.size(); ++i) {
    const int64_t ch = static_cast<int64_t>(i) % c;
    x[i] = x[i] * norm_std_[ch] + norm_mean_[ch];
  }
}

void GraphAutoencoder::save_norm(BlobContainer& c) const {
  c.put(prefix_ + ".norm.mean", {cfg_.channels}, norm_mean_);
  c.put(prefix_ + ".norm.std", {cfg_.channels}, norm_std_);
}

void GraphAutoencoder::load_norm(const BlobContainer& c) {
  std::vector<double> mean = c.entry(prefix_ + ".norm.mean").data;
  std::vector<double> stdev = c.entry(prefix_ + ".norm.std").data;
  set_norm(std::move(mean), std::move(stdev));
}

void compute_norm_stats(std::span<const double> data, int64_t channels,
                        std::vector<double>& mean, std::vector<double>& stdev) {
  if (channels < 1 || data.size() % channels != 0)
    fail(ErrorCode::validation, "norm stats need an N x channels sample");
  const int64_t rows = static_cast<int64_t>(data.size()) / channels;
  if (rows < 1) fail(ErrorCode::validation, "norm stats need at least one row");
  mean.assign(channels, 0.0);
  stdev.assign(channels, 0.0);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < channels; ++c) mean[c] += data[r * channels + c];
  for (int64_t c = 0; c < channels; ++c) mean[c] /= static_cast<double>(rows);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < channels; ++c) {
      const double d = data[r * channels + c] - mean[c];
      stdev[c] += d * d;
    }
  for (int64_t c = 0; c < channels; ++c) {
    stdev[c] = std::sqrt(stdev[c] / static_cast<double>(rows));
    if (stdev[c] < 1e-8) stdev[c] = 1.0;  // constant channel: shift only
  }
}

std::vector<double> encode_field_sections(GraphAutoencoder& ae, const GeometryBatches& gb,
                                          int64_t section_count, std::span<const double> field) {
  const int64_t ch = ae.config().channels;
  const int64_t lat = ae.config().latent;
  const std::vector<double> norm = ae.normalize(field);
  std::vector<double> z(section_count * lat, 0.0);
  Tape tape;
  auto run = [&](const SectionBatch& b, const std::vector<int32_t>& sections) {
    if (b.empty()) return;
    tape.reset();
    const std::vector<double> x = gather_rows(norm, ch, b.point_index);
    Tape::Var zv = ae.encode(tape, tape.constant(int64_t{b.count} * b.p, ch, x), b);
    std::span<const double> v = tape.value(zv);
    for (int64_t i = 0; i < std::ssize(sections); ++i)
      std::copy_n(v.begin() + i * lat, lat, z.begin() + int64_t{sections[i]} * lat);
  };
  run(gb.pipes, gb.pipe_sections);
  run(gb.junctions, gb.junction_sections);
  return z;
}

std::vector<double> decode_field_sections(GraphAutoencoder& ae, const GeometryBatches& gb,
                                          int64_t total_points, std::span<const double> z) {
  const int64_t ch = ae.config().channels;
  const int64_t lat = ae.config().latent;
  std::vector<double> out(total_points * ch, 0.0);
  Tape tape;
  auto run = [&](const SectionBatch& b, const std::vector<int32_t>& sections) {
    if (b.empty()) return;
    tape.reset();
    std::vector<double> zb(int64_t{b.count} * lat);
    for (int64_t i = 0; i < std::ssize(sections); ++i)
      std::copy_n(z.begin() + int64_t{sections[i]} * lat, lat, zb.begin() + i * lat);
    Tape::Var y = ae.decode(tape, tape.constant(b.count, lat, zb), b);
    std::span<const double> v = tape.value(y);
    for (int64_t i = 0; i < std::ssize(b.point_index); ++i)
      std::copy_n(v.begin() + i * ch, ch, out.begin() + int64_t{b.point_index[i]} * ch);
  };
  run(gb.pipes, gb.pipe_sections);
  run(gb.junctions, gb.junction_sections);
  ae.denormalize(out);
  return out;
}

}  // namespace galds
