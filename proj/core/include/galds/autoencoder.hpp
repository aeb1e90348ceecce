#pragma once

#include <string>
#include <vector>

#include "galds/checkpoint.hpp"
#include "galds/global_graph.hpp"
#include "galds/nn_layers.hpp"

namespace galds {

// A batch of same-kind sections prepared for tape evaluation. Pipe batches
// share the canonical template adjacency; junction batches carry one
// adjacency per section. Referenced adjacencies live in the owning
// GlobalGraph (or the canonical template) and must outlive the batch.
struct SectionBatch {
  SectionKind kind = SectionKind::pipe;
  int32_t p = 0;
  int32_t count = 0;
  const std::vector<double>* shared_adj = nullptr;
  std::vector<const std::vector<double>*> adjacencies;
  std::vector<double> coords;        // (count * p) x 3: rho, cos theta, sin theta
  std::vector<int32_t> point_index;  // global point row per batch row
  bool empty() const { return count == 0; }
};

// Appends one section; the batch kind is fixed by the first append.
void append_section(SectionBatch& b, const GlobalGraph& g, int32_t section,
                    int32_t point_base = 0);

// Per-kind batches covering one geometry, plus the permutation that takes the
// [pipes; junctions] row concatenation back to section order.
struct GeometryBatches {
  SectionBatch pipes;
  SectionBatch junctions;
  std::vector<int32_t> pipe_sections, junction_sections;
  std::vector<int32_t> to_section_order;
};

GeometryBatches make_geometry_batches(const GlobalGraph& g);

// Rows of an N x channels field selected by batch point order.
std::vector<double> gather_rows(std::span<const double> field, int64_t channels,
                                const std::vector<int32_t>& point_index);

struct AeConfig {
  int32_t channels = 1;
  int32_t latent = 1;
  int32_t hidden = 16;
};

// Section autoencoder: a shared graph-conv encoder with mean pooling and one
// per-kind decoder that rebuilds the pointwise field from the latent plus the
// static polar coordinates.
class GraphAutoencoder {
 public:
  GraphAutoencoder(std::string prefix, const AeConfig& cfg, Rng& rng);

  const std::string& prefix() const { return prefix_; }
  const AeConfig& config() const { return cfg_; }

  Tape::Var encode(Tape& tape, Tape::Var x, const SectionBatch& b);
  Tape::Var decode(Tape& tape, Tape::Var z, const SectionBatch& b);

  void collect(ParamRegistry& reg);
  void collect_encoder(ParamRegistry& reg);
  void collect_decoders(ParamRegistry& reg);

  // Per-channel affine normalization; set from training data, applied by the
  // caller before encode and after decode.
  void set_norm(std::vector<double> mean, std::vector<double> stdev);
  const std::vector<double>& norm_mean() const { return norm_mean_; }
  const std::vector<double>& norm_std() const { return norm_std_; }
  std::vector<double> normalize(std::span<const double> x) const;
  void denormalize(std::vector<double>& x) const;

  void save_norm(BlobContainer& c) const;
  void load_norm(const BlobContainer& c);

 private:
  struct Decoder {
    DenseLayer ff;
    std::vector<GconvLayer> gc;
  };

  Tape::Var decode_with(Tape& tape, Decoder& dec, Tape::Var z, const SectionBatch& b);
  void collect_decoder(ParamRegistry& reg, const std::string& name, Decoder& dec);

  std::string prefix_;
  AeConfig cfg_;
  std::vector<GconvLayer> enc_gc_;
  DenseLayer enc_ff_;
  Decoder dec_pipe_;
  Decoder dec_junction_;
  std::vector<double> norm_mean_, norm_std_;
};

// Mean and standard deviation per channel over an N x channels sample, with a
// floor that keeps constant channels usable.
void compute_norm_stats(std::span<const double> data, int64_t channels,
                        std::vector<double>& mean, std::vector<double>& stdev);

// Encodes a whole-geometry pointwise field (total_points x channels) into
// per-section latents (section_count x latent), batching by section kind.
std::vector<double> encode_field_sections(GraphAutoencoder& ae, const GeometryBatches& gb,
                                          int64_t section_count, std::span<const double> field);

// Decodes per-section latents back to a denormalized pointwise field.
std::vector<double> decode_field_sections(GraphAutoencoder& ae, const GeometryBatches& gb,
                                          int64_t total_points, std::span<const double> z);

}  // namespace galds
