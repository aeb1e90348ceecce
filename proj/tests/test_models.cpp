#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <vector>

#include "galds/autoencoder.hpp"
#include "galds/checkpoint.hpp"
#include "galds/error.hpp"
#include "galds/latent_dynamics.hpp"
#include "galds/latent_transform.hpp"
#include "galds/trainer.hpp"
#include "support.hpp"

using namespace galds;
using namespace galds::testing;

namespace {

std::vector<double> var_values(const Tape& tape, Tape::Var v) {
  std::span<const double> s = tape.value(v);
  return {s.begin(), s.end()};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Puts distinct, well-scaled normalization stats on every sub-model so that
// checkpoint round trips exercise the norm entries too.
void seed_norms(ModelSet& ms) {
  ms.ae_u.set_norm({0.1, -0.2, 0.3}, {1.5, 2.0, 0.7});
  ms.ae_n0.set_norm({0.4}, {1.1});
  ms.ae_np.set_norm({-0.5}, {0.9});
  ms.ae_k.set_norm({0.25}, {1.25});
  const int32_t w = ms.psi_u.input_width();
  std::vector<double> mean(w), stdev(w);
  for (int32_t i = 0; i < w; ++i) {
    mean[i] = 0.05 * (i + 1);
    stdev[i] = 1.0 + 0.1 * i;
  }
  ms.psi_u.set_norm(mean, stdev);
}

ModelConfig small_model_config() {
  ModelConfig mc;
  mc.hidden = 6;
  mc.velocity_latent = 3;
  mc.species_latent = 1;
  mc.psi_u_hidden = 7;
  mc.psi_z_hidden = 5;
  mc.psi_z_layers = 2;
  return mc;
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("geometry batches partition the flat point array") {
  const GlobalGraph g = y_graph();
  const GeometryBatches gb = make_geometry_batches(g);

  CHECK(gb.pipes.kind == SectionKind::pipe);
  CHECK(gb.pipes.p == kPipePoints);
  CHECK(gb.junctions.p == kBifurcationPoints);
  CHECK(gb.pipes.count + gb.junctions.count == g.section_count());
  CHECK(gb.junctions.count == 1);
  CHECK(gb.pipes.shared_adj == &pipe_template().a_hat);
  CHECK(gb.junctions.adjacencies.size() == 1);

  // Every global point appears exactly once across the two batches.
  std::vector<int32_t> seen(static_cast<size_t>(g.total_points), 0);
  for (int32_t i : gb.pipes.point_index) seen[static_cast<size_t>(i)]++;
  for (int32_t i : gb.junctions.point_index) seen[static_cast<size_t>(i)]++;
  CHECK(std::all_of(seen.begin(), seen.end(), [](int32_t n) { return n == 1; }));

  // to_section_order maps each section to its row in [pipes; junctions].
  std::vector<int32_t> hit(static_cast<size_t>(g.section_count()), 0);
  for (int32_t r : gb.to_section_order) hit[static_cast<size_t>(r)]++;
  CHECK(std::all_of(hit.begin(), hit.end(), [](int32_t n) { return n == 1; }));
  for (size_t i = 0; i < gb.pipe_sections.size(); ++i)
    CHECK(gb.to_section_order[static_cast<size_t>(gb.pipe_sections[i])] ==
          static_cast<int32_t>(i));

  SUBCASE("gather_rows picks the batch point order") {
    std::vector<double> field(static_cast<size_t>(g.total_points) * 2);
    for (int32_t i = 0; i < g.total_points; ++i) {
      field[2 * static_cast<size_t>(i)] = i;
      field[2 * static_cast<size_t>(i) + 1] = -i;
    }
    const std::vector<double> rows = gather_rows(field, 2, gb.pipes.point_index);
    for (size_t r = 0; r < gb.pipes.point_index.size(); ++r) {
      CHECK(rows[2 * r] == doctest::Approx(gb.pipes.point_index[r]));
      CHECK(rows[2 * r + 1] == doctest::Approx(-gb.pipes.point_index[r]));
    }
  }
}

TEST_CASE("field sections encode and decode with the declared shapes") {
  const GlobalGraph g = y_graph();
  const GeometryBatches gb = make_geometry_batches(g);

  Rng rng(11);
  GraphAutoencoder ae("ae.u", AeConfig{3, 3, 8}, rng);
  ae.set_norm({0.0, 0.0, 0.0}, {1.0, 1.0, 1.0});

  Rng data_rng(5);
  const std::vector<double> field =
      random_values(data_rng, static_cast<size_t>(g.total_points) * 3);

  const std::vector<double> z = encode_field_sections(ae, gb, g.section_count(), field);
  CHECK(z.size() == static_cast<size_t>(g.section_count()) * 3);
  for (double v : z) CHECK(std::isfinite(v));

  const std::vector<double> rec = decode_field_sections(ae, gb, g.total_points, z);
  CHECK(rec.size() == field.size());
  for (double v : rec) CHECK(std::isfinite(v));

  // Both directions are deterministic for fixed weights.
  CHECK(max_abs_diff(z, encode_field_sections(ae, gb, g.section_count(), field)) == 0.0);
  CHECK(max_abs_diff(rec, decode_field_sections(ae, gb, g.total_points, z)) == 0.0);

  SUBCASE("channel and latent mismatches are rejected") {
    Tape tape;
    const std::vector<double> bad(static_cast<size_t>(gb.pipes.count) * gb.pipes.p * 2, 0.1);
    Tape::Var x = tape.constant(gb.pipes.count * gb.pipes.p, 2, bad);
    CHECK_THROWS_AS(ae.encode(tape, x, gb.pipes), Error);
    const std::vector<double> zb(static_cast<size_t>(gb.pipes.count) * 2, 0.1);
    Tape::Var zv = tape.constant(gb.pipes.count, 2, zb);
    CHECK_THROWS_AS(ae.decode(tape, zv, gb.pipes), Error);
  }
}

TEST_CASE("section latents ignore point relabeling and decoders follow it") {
  // One hand-built 4-point section, fed once in original and once in reversed
  // point order. The latent must match; the decoded field must permute along.
  const int32_t p = 4;
  const EdgeList edges = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  const std::vector<double> adj = dense_normalized_adjacency(p, edges);
  std::vector<int32_t> perm = {3, 1, 0, 2};
  EdgeList perm_edges;
  for (auto [a, b] : edges)
    perm_edges.push_back({perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]});
  const std::vector<double> perm_adj = dense_normalized_adjacency(p, perm_edges);

  Rng coords_rng(3);
  const std::vector<double> coords = random_values(coords_rng, static_cast<size_t>(p) * 3);
  Rng field_rng(4);
  const std::vector<double> x = random_values(field_rng, static_cast<size_t>(p) * 2);
  std::vector<double> coords_p(coords.size()), x_p(x.size());
  for (int32_t i = 0; i < p; ++i) {
    const int32_t j = perm[static_cast<size_t>(i)];
    std::copy_n(coords.begin() + 3 * i, 3, coords_p.begin() + 3 * j);
    std::copy_n(x.begin() + 2 * i, 2, x_p.begin() + 2 * j);
  }

  auto batch = [&](const std::vector<double>& c, const std::vector<double>& a) {
    SectionBatch b;
    b.kind = SectionKind::junction;
    b.p = p;
    b.count = 1;
    b.coords = c;
    b.adjacencies = {&a};
    b.point_index.resize(static_cast<size_t>(p));
    std::iota(b.point_index.begin(), b.point_index.end(), 0);
    return b;
  };
  const SectionBatch b0 = batch(coords, adj);
  const SectionBatch b1 = batch(coords_p, perm_adj);

  Rng rng(21);
  GraphAutoencoder ae("ae.t", AeConfig{2, 3, 6}, rng);

  Tape tape;
  Tape::Var z0 = ae.encode(tape, tape.constant(p, 2, x), b0);
  Tape::Var z1 = ae.encode(tape, tape.constant(p, 2, x_p), b1);
  CHECK(max_abs_diff(var_values(tape, z0), var_values(tape, z1)) < 1e-12);

  Tape::Var y0 = ae.decode(tape, z0, b0);
  Tape::Var y1 = ae.decode(tape, z1, b1);
  const std::vector<double> d0 = var_values(tape, y0);
  const std::vector<double> d1 = var_values(tape, y1);
  for (int32_t i = 0; i < p; ++i) {
    const int32_t j = perm[static_cast<size_t>(i)];
    for (int32_t c = 0; c < 2; ++c)
      CHECK(d0[static_cast<size_t>(2 * i + c)] ==
            doctest::Approx(d1[static_cast<size_t>(2 * j + c)]).epsilon(1e-12));
  }
}

TEST_CASE("normalization stats and round trip") {
  std::vector<double> mean, stdev;
  // Two channels, second one constant: its scale falls back to 1.
  const std::vector<double> data = {1.0, 10.0, 3.0, 10.0, 5.0, 10.0, 7.0, 10.0};
  compute_norm_stats(data, 2, mean, stdev);
  CHECK(mean[0] == doctest::Approx(4.0));
  CHECK(mean[1] == doctest::Approx(10.0));
  CHECK(stdev[0] == doctest::Approx(std::sqrt(5.0)));  // population std of 1,3,5,7
  CHECK(stdev[1] == doctest::Approx(1.0));

  CHECK_THROWS_AS(compute_norm_stats(std::vector<double>{1.0}, 2, mean, stdev), Error);

  Rng rng(9);
  GraphAutoencoder ae("ae.t", AeConfig{2, 1, 4}, rng);
  ae.set_norm(mean, stdev);
  std::vector<double> x = {1.0, 10.0, 7.0, 10.0};
  std::vector<double> n = ae.normalize(x);
  CHECK(n[0] == doctest::Approx((1.0 - 4.0) / std::sqrt(5.0)));
  CHECK(n[1] == doctest::Approx(0.0));
  ae.denormalize(n);
  CHECK(max_abs_diff(n, x) < 1e-12);

  CHECK_THROWS_AS(ae.set_norm({0.0}, {1.0}), Error);             // wrong width
  CHECK_THROWS_AS(ae.set_norm({0.0, 0.0}, {1.0, 0.0}), Error);   // zero scale
  CHECK_THROWS_AS(ae.set_norm({0.0, 0.0}, {1.0, -1.0}), Error);  // negative scale
}

TEST_CASE("velocity latent transform consumes local speed plus section geometry") {
  const GlobalGraph g = y_graph();
  const int64_t c = g.section_count();
  std::vector<double> u1d(static_cast<size_t>(c) * 3);
  for (size_t i = 0; i < u1d.size(); ++i) u1d[i] = 0.01 * static_cast<double>(i) - 0.1;

  Rng rng(31);
  LatentTransform psi(PsiUConfig{7, 3, true}, rng);
  CHECK(psi.input_width() == 5);
  const std::vector<double> rows = psi.build_inputs(g, u1d);
  CHECK(rows.size() == static_cast<size_t>(c) * 5);
  for (int64_t s = 0; s < c; ++s) {
    const double* r = rows.data() + s * 5;
    CHECK(r[0] == doctest::Approx(u1d[static_cast<size_t>(3 * s)]));
    CHECK(r[1] == doctest::Approx(u1d[static_cast<size_t>(3 * s + 1)]));
    CHECK(r[2] == doctest::Approx(u1d[static_cast<size_t>(3 * s + 2)]));
    CHECK(r[3] == doctest::Approx(g.frame(static_cast<int32_t>(s)).radius));
    CHECK(r[4] == doctest::Approx(g.frame(static_cast<int32_t>(s)).curvature));
    CHECK(r[3] > 0.0);
  }

  Tape tape;
  Tape::Var out = tape.constant(static_cast<int32_t>(c), 5, rows);
  out = psi.forward(tape, out);
  CHECK(out.rows == static_cast<int32_t>(c));
  CHECK(out.cols == 3);

  LatentTransform bare(PsiUConfig{7, 3, false}, rng);
  CHECK(bare.input_width() == 3);
  CHECK(bare.build_inputs(g, u1d).size() == static_cast<size_t>(c) * 3);
  CHECK_THROWS_AS(psi.build_inputs(g, std::vector<double>(3, 0.0)), Error);
}

TEST_CASE("checkpoint round trip reproduces the model set byte for byte") {
  ModelSet ms(small_model_config(), 42);
  seed_norms(ms);

  Checkpoint ck;
  ms.save_into(ck);
  const std::vector<uint8_t> bytes = ck.serialize(kCheckpointMagic);

  const Checkpoint back = Checkpoint::deserialize(bytes, kCheckpointMagic);
  ModelSet ms2 = ModelSet::from_checkpoint(back);
  CHECK(ms2.cfg.hidden == 6);
  CHECK(ms2.seed == 42);
  CHECK(ms2.all_params().parameter_count() == ms.all_params().parameter_count());

  Checkpoint again;
  ms2.save_into(again);
  CHECK(again.serialize(kCheckpointMagic) == bytes);

  SUBCASE("missing parameters are an io error") {
    Checkpoint empty;
    for (const auto& [k, v] : ck.meta_map()) empty.set_meta(k, v);
    CHECK_THROWS_AS(ModelSet::from_checkpoint(empty), Error);
  }
  SUBCASE("wrong magic is rejected") {
    CHECK_THROWS_AS(Checkpoint::deserialize(bytes, kFieldSeriesMagic), Error);
  }
}

TEST_CASE("blob container file round trip preserves entries and metadata") {
  const std::filesystem::path dir = scratch_dir("blob_roundtrip");
  BlobContainer c;
  c.put("a.W", {2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  c.put("a.b", {3}, {0.5, -0.5, 1e-30});
  c.set_meta("note", "line with \"quotes\" and a\nnewline");
  c.set_meta_int("count", -7);
  c.set_meta_double("scale", 0.1);

  const std::filesystem::path path = dir / "blob.bin";
  c.save(path, kCheckpointMagic);
  const BlobContainer d = BlobContainer::load(path, kCheckpointMagic);

  REQUIRE(d.entries().size() == 2);
  CHECK(d.entry("a.W").shape == std::vector<int64_t>{2, 3});
  CHECK(d.entry("a.W").data == c.entry("a.W").data);
  CHECK(d.entry("a.b").data == c.entry("a.b").data);
  CHECK(d.meta("note") == c.meta("note"));
  CHECK(d.meta_int("count") == -7);
  CHECK(d.meta_double("scale") == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(d.has("a.W"));
  CHECK_FALSE(d.has("missing"));
  CHECK_FALSE(d.has_meta("missing"));
  CHECK_THROWS_AS(d.entry("missing"), Error);
  CHECK_THROWS_AS(BlobContainer::load(dir / "absent.bin", kCheckpointMagic), Error);
}

TEST_CASE("widened dynamics adopts base weights without changing the function") {
  PsiZConfig base_cfg;
  base_cfg.latent = 2;
  base_cfg.velocity_latent = 3;
  base_cfg.hidden = 6;
  base_cfg.layers = 3;
  PsiZConfig wide_cfg = base_cfg;
  wide_cfg.reaction_features = true;
  CHECK(wide_cfg.extra_width() == 2);
  CHECK(wide_cfg.feature_width() == base_cfg.feature_width() + 2);

  Rng r1(100), r2(200);
  LatentDynamics base("psi_z.t", base_cfg, r1);
  LatentDynamics wide("psi_z.t", wide_cfg, r2);
  wide.adopt_widened(base);

  const int32_t c = 3;
  const CsrMatrix a_hat = csr_normalized_adjacency(c, {{0, 1}, {1, 2}});
  Rng data_rng(7);
  const std::vector<double> zv = random_values(data_rng, static_cast<size_t>(c) * 2);
  const std::vector<double> sv = random_values(data_rng, static_cast<size_t>(c) * 4);
  const std::vector<double> tv = random_values(data_rng, static_cast<size_t>(c));
  const std::vector<double> ev = random_values(data_rng, static_cast<size_t>(c) * 2);

  Tape tape;
  Tape::Var z = tape.constant(c, 2, zv);
  Tape::Var stat = tape.constant(c, 4, sv);
  Tape::Var t = tape.constant(c, 1, tv);
  Tape::Var extra = tape.constant(c, 2, ev);
  // The adopted rows multiplying the (nonzero) extra inputs are zero, so the
  // widened right hand side must match the base model exactly.
  Tape::Var f_base = base.rhs(tape, z, stat, t, Tape::Var{}, a_hat);
  Tape::Var f_wide = wide.rhs(tape, z, stat, t, extra, a_hat);
  CHECK(max_abs_diff(var_values(tape, f_base), var_values(tape, f_wide)) < 1e-14);

  CHECK_THROWS_AS(wide.rhs(tape, z, stat, t, Tape::Var{}, a_hat), Error);

  SUBCASE("adoption direction is validated") {
    Rng r3(300);
    LatentDynamics wide2("psi_z.t", wide_cfg, r3);
    CHECK_THROWS_AS(base.adopt_widened(wide2), Error);   // narrowing
    CHECK_THROWS_AS(wide2.adopt_widened(wide), Error);   // base must lack extras
  }
}

TEST_CASE("model set adoption copies weights and normalization") {
  ModelConfig base_cfg = small_model_config();
  ModelConfig wide_cfg = base_cfg;
  wide_cfg.reaction_features = true;

  ModelSet base(base_cfg, 42);
  seed_norms(base);
  ModelSet wide(wide_cfg, 77);  // different seed: weights start out different
  wide.adopt(base);

  auto expect_equal = [](GraphAutoencoder& a, GraphAutoencoder& b) {
    ParamRegistry ra, rb;
    a.collect(ra);
    b.collect(rb);
    REQUIRE(ra.items().size() == rb.items().size());
    for (size_t i = 0; i < ra.items().size(); ++i)
      CHECK(ra.items()[i].second->values() == rb.items()[i].second->values());
  };
  expect_equal(wide.ae_u, base.ae_u);
  expect_equal(wide.ae_n0, base.ae_n0);
  expect_equal(wide.ae_np, base.ae_np);
  CHECK(wide.ae_u.norm_mean() == base.ae_u.norm_mean());
  CHECK(wide.psi_u.norm_std() == base.psi_u.norm_std());

  // The reaction autoencoder is new material for the wider model and is not
  // adopted: its normalization stays at the constructor default.
  CHECK(wide.ae_k.norm_mean() == std::vector<double>{0.0});
  CHECK(wide.ae_k.norm_std() == std::vector<double>{1.0});

  // The widened dynamics reproduce the base rates even with live extras.
  const int32_t c = 3;
  const CsrMatrix a_hat = csr_normalized_adjacency(c, {{0, 1}, {1, 2}});
  Rng data_rng(19);
  const std::vector<double> zv = random_values(data_rng, static_cast<size_t>(c));
  const std::vector<double> sv = random_values(data_rng, static_cast<size_t>(c) * 4);
  const std::vector<double> tv = random_values(data_rng, static_cast<size_t>(c));
  const std::vector<double> ev = random_values(data_rng, static_cast<size_t>(c) * 2);
  Tape tape;
  Tape::Var z = tape.constant(c, 1, zv);
  Tape::Var stat = tape.constant(c, 4, sv);
  Tape::Var t = tape.constant(c, 1, tv);
  Tape::Var f_base = base.psi_n0.rhs(tape, z, stat, t, Tape::Var{}, a_hat);
  Tape::Var f_wide = wide.psi_n0.rhs(tape, z, stat, t, tape.constant(c, 2, ev), a_hat);
  CHECK(max_abs_diff(var_values(tape, f_base), var_values(tape, f_wide)) < 1e-14);

  SUBCASE("matching extras copy the dynamics directly") {
    ModelSet twin(base_cfg, 99);
    twin.adopt(base);
    Tape t2;
    Tape::Var z2 = t2.constant(c, 1, zv);
    Tape::Var s2 = t2.constant(c, 4, sv);
    Tape::Var tt = t2.constant(c, 1, tv);
    Tape::Var fa = base.psi_n0.rhs(t2, z2, s2, tt, Tape::Var{}, a_hat);
    Tape::Var fb = twin.psi_n0.rhs(t2, z2, s2, tt, Tape::Var{}, a_hat);
    CHECK(max_abs_diff(var_values(t2, fa), var_values(t2, fb)) == 0.0);
  }
  SUBCASE("architecture mismatches are rejected") {
    ModelConfig other = base_cfg;
    other.hidden = 8;
    ModelSet odd(other, 1);
    CHECK_THROWS_AS(odd.adopt(base), Error);
  }
}

TEST_CASE("zero head turns a dynamics step into the identity") {
  PsiZConfig cfg;
  cfg.latent = 2;
  cfg.velocity_latent = 3;
  cfg.hidden = 5;
  cfg.layers = 2;
  Rng rng(55);
  LatentDynamics dyn("psi_z.t", cfg, rng);

  ParamRegistry reg;
  dyn.collect(reg);
  bool zeroed = false;
  for (const auto& [name, t] : reg.items())
    if (name.rfind("psi_z.t.head.", 0) == 0) {
      std::fill(t->values().begin(), t->values().end(), 0.0);
      zeroed = true;
    }
  REQUIRE(zeroed);

  const int32_t c = 3;
  const CsrMatrix a_hat = csr_normalized_adjacency(c, {{0, 1}, {1, 2}});
  Rng data_rng(8);
  const std::vector<double> zv = random_values(data_rng, static_cast<size_t>(c) * 2);
  const std::vector<double> sv = random_values(data_rng, static_cast<size_t>(c) * 4);

  for (Integrator method : {Integrator::euler, Integrator::midpoint, Integrator::rk4}) {
    Tape tape;
    Tape::Var z = tape.constant(c, 2, zv);
    Tape::Var stat = tape.constant(c, 4, sv);
    Tape::Var out = dyn.step(tape, z, stat, Tape::Var{}, {0.25}, {0.125}, c, a_hat, method);
    CHECK(max_abs_diff(var_values(tape, out), zv) == 0.0);
  }
}

TEST_CASE("dynamics euler step equals state plus dt times the rate") {
  PsiZConfig cfg;
  cfg.latent = 2;
  cfg.velocity_latent = 3;
  cfg.hidden = 5;
  cfg.layers = 2;
  Rng rng(66);
  LatentDynamics dyn("psi_z.t", cfg, rng);

  const int32_t c = 3;
  const CsrMatrix a_hat = csr_normalized_adjacency(c, {{0, 1}, {1, 2}});
  Rng data_rng(12);
  const std::vector<double> zv = random_values(data_rng, static_cast<size_t>(c) * 2);
  const std::vector<double> sv = random_values(data_rng, static_cast<size_t>(c) * 4);
  const double t0 = 0.3, dt = 0.05;

  Tape tape;
  Tape::Var z = tape.constant(c, 2, zv);
  Tape::Var stat = tape.constant(c, 4, sv);
  Tape::Var t = tape.constant(c, 1, std::vector<double>(static_cast<size_t>(c), t0));
  const std::vector<double> k1 =
      var_values(tape, dyn.rhs(tape, z, stat, t, Tape::Var{}, a_hat));
  const std::vector<double> stepped = var_values(
      tape, dyn.step(tape, z, stat, Tape::Var{}, {t0}, {dt}, c, a_hat, Integrator::euler));
  for (size_t i = 0; i < stepped.size(); ++i)
    CHECK(stepped[i] == doctest::Approx(zv[i] + dt * k1[i]).epsilon(1e-14));

  SUBCASE("shape validation") {
    Tape t2;
    Tape::Var z2 = t2.constant(c, 2, zv);
    Tape::Var s2 = t2.constant(c, 4, sv);
    CHECK_THROWS_AS(
        dyn.step(t2, z2, s2, Tape::Var{}, {0.1, 0.2}, {0.1}, c, a_hat, Integrator::euler),
        Error);
    CHECK_THROWS_AS(
        dyn.step(t2, z2, s2, Tape::Var{}, {0.1, 0.2}, {0.1, 0.1}, c, a_hat, Integrator::euler),
        Error);
  }
}

TEST_CASE("dynamics rate commutes with section relabeling") {
  PsiZConfig cfg;
  cfg.latent = 2;
  cfg.velocity_latent = 3;
  cfg.hidden = 6;
  cfg.layers = 3;
  Rng rng(91);
  LatentDynamics dyn("psi_z.t", cfg, rng);

  const int32_t c = 4;
  const EdgeList edges = {{0, 1}, {1, 2}, {1, 3}};
  const std::vector<int32_t> perm = {2, 0, 3, 1};
  EdgeList perm_edges;
  for (auto [a, b] : edges)
    perm_edges.push_back({perm[static_cast<size_t>(a)], perm[static_cast<size_t>(b)]});
  const CsrMatrix a0 = csr_normalized_adjacency(c, edges);
  const CsrMatrix a1 = csr_normalized_adjacency(c, perm_edges);

  Rng data_rng(17);
  const std::vector<double> zv = random_values(data_rng, static_cast<size_t>(c) * 2);
  const std::vector<double> sv = random_values(data_rng, static_cast<size_t>(c) * 4);
  const std::vector<double> tv = random_values(data_rng, static_cast<size_t>(c));
  auto permute_rows = [&](const std::vector<double>& v, int32_t w) {
    std::vector<double> out(v.size());
    for (int32_t i = 0; i < c; ++i)
      std::copy_n(v.begin() + i * w, w, out.begin() + perm[static_cast<size_t>(i)] * w);
    return out;
  };

  Tape tape;
  Tape::Var f0 = dyn.rhs(tape, tape.constant(c, 2, zv), tape.constant(c, 4, sv),
                         tape.constant(c, 1, tv), Tape::Var{}, a0);
  Tape::Var f1 = dyn.rhs(tape, tape.constant(c, 2, permute_rows(zv, 2)),
                         tape.constant(c, 4, permute_rows(sv, 4)),
                         tape.constant(c, 1, permute_rows(tv, 1)), Tape::Var{}, a1);
  CHECK(max_abs_diff(permute_rows(var_values(tape, f0), 2), var_values(tape, f1)) < 1e-12);
}

}  // TEST_SUITE
