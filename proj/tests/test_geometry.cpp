#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "galds/error.hpp"
#include "galds/frames.hpp"
#include "galds/global_graph.hpp"
#include "galds/skeleton.hpp"
#include "galds/templates.hpp"
#include "galds/vec3.hpp"

#include "support.hpp"

using namespace galds;
namespace gt = galds::testing;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("skeleton parsing handles comments, reordering, and round-trips") {
  Skeleton s = parse_skeleton(gt::kYTree, "inline");
  CHECK(s.size() == 7);
  CHECK(s.root == 0);
  CHECK(s.nodes[0].parent == -1);
  CHECK(s.children[2].size() == 2);  // bifurcation at node id 3

  // Forward references and arbitrary id ordering.
  Skeleton r = parse_skeleton("2 1 1 0 0 1 9\n9 1 0 0 0 1 -1\n", "inline");
  CHECK(r.size() == 2);
  CHECK(r.nodes[1].parent != -1);

  Skeleton again = parse_skeleton(serialize_skeleton(s), "roundtrip");
  REQUIRE(again.size() == s.size());
  for (int32_t i = 0; i < s.size(); ++i) {
    CHECK(again.nodes[static_cast<size_t>(i)].radius ==
          s.nodes[static_cast<size_t>(i)].radius);
    CHECK(again.nodes[static_cast<size_t>(i)].pos == s.nodes[static_cast<size_t>(i)].pos);
  }
}

TEST_CASE("skeleton parsing rejects malformed input") {
  CHECK_THROWS_AS(parse_skeleton("", "empty"), Error);
  CHECK_THROWS_AS(parse_skeleton("1 1 0 0 0 1 5\n", "dangling parent"), Error);
  CHECK_THROWS_AS(parse_skeleton("1 1 0 0 0 -2 -1\n", "negative radius"), Error);
  CHECK_THROWS_AS(parse_skeleton("1 1 0 0 0 1 -1\n1 1 1 0 0 1 1\n", "dup id"), Error);
}

TEST_CASE("skeleton file save and load round-trip") {
  const auto dir = gt::scratch_dir("skeleton_io");
  Skeleton s = parse_skeleton(gt::kYTree, "inline");
  save_skeleton(s, dir / "y.swc");
  Skeleton back = load_skeleton(dir / "y.swc");
  CHECK(back.size() == s.size());
  CHECK_THROWS_AS(load_skeleton(dir / "missing.swc"), Error);
}

TEST_CASE("frames are orthonormal, evenly spaced, and track the radius") {
  Skeleton s = parse_skeleton(gt::kYTree, "inline");
  FramePlan plan = build_frames(s, 0.5);
  REQUIRE(plan.frames.size() > 10);
  CHECK(plan.inlet == 0);
  CHECK(plan.outlets.size() == 2);

  int junctions = 0;
  for (const CrossSectionFrame& f : plan.frames) {
    CHECK(norm(f.tangent) == doctest::Approx(1.0));
    CHECK(norm(f.e1) == doctest::Approx(1.0));
    CHECK(norm(f.e2) == doctest::Approx(1.0));
    CHECK(std::abs(dot(f.tangent, f.e1)) < 1e-9);
    CHECK(std::abs(dot(f.tangent, f.e2)) < 1e-9);
    CHECK(std::abs(dot(f.e1, f.e2)) < 1e-9);
    // Right-handed: tangent = e1 x e2.
    const Vec3 c = cross(f.e1, f.e2);
    CHECK(norm(c - f.tangent) < 1e-9);
    CHECK(f.radius > 0.5);
    CHECK(f.radius < 1.5);
    if (f.kind == SectionKind::bifurcation) {
      ++junctions;
      CHECK(f.n_children == 2);
    }
  }
  CHECK(junctions == 1);

  // Consecutive frames on the same branch sit ~spacing apart in arc length.
  for (auto [a, b] : plan.section_edges) {
    const double darc = std::abs(plan.frames[static_cast<size_t>(b)].arc_to_root -
                                 plan.frames[static_cast<size_t>(a)].arc_to_root);
    CHECK(darc > 0.2);
    CHECK(darc < 1.0);
  }
}

TEST_CASE("frame construction rejects unusable inputs") {
  Skeleton s = parse_skeleton(gt::kYTree, "inline");
  CHECK_THROWS_AS(build_frames(s, 100.0), Error);  // coarser than the shortest branch

  // Trifurcation: three children on one node.
  const char* tri =
      "1 1 0 0 0 1 -1\n2 1 2 0 0 1 1\n3 1 4 2 0 1 2\n4 1 4 -2 0 1 2\n5 1 4 0 2 1 2\n"
      "6 1 6 4 0 1 3\n7 1 6 -4 0 1 4\n8 1 6 0 4 1 5\n";
  CHECK_THROWS_AS(build_frames(parse_skeleton(tri, "tri"), 0.5), Error);
}

TEST_CASE("pipe template layout: center plus two aligned 8-rings") {
  const TemplateGraph& t = pipe_template();
  REQUIRE(t.p == kPipePoints);
  CHECK(t.rho[0] == 0.0);
  int inner = 0, outer = 0;
  for (int32_t k = 1; k < t.p; ++k) {
    if (t.rho[static_cast<size_t>(k)] == 0.5) ++inner;
    if (t.rho[static_cast<size_t>(k)] == 1.0) ++outer;
  }
  CHECK(inner == kRingPoints);
  CHECK(outer == kRingPoints);
  CHECK(t.a_hat.size() == static_cast<size_t>(t.p) * t.p);
  // Symmetric normalized adjacency.
  for (int32_t i = 0; i < t.p; ++i)
    for (int32_t j = 0; j < i; ++j)
      CHECK(t.a_hat[static_cast<size_t>(i) * t.p + j] ==
            doctest::Approx(t.a_hat[static_cast<size_t>(j) * t.p + i]));
}

TEST_CASE("bifurcation template adds six boundary connectors") {
  Skeleton s = parse_skeleton(gt::kYTree, "inline");
  FramePlan plan = build_frames(s, 0.5);
  const CrossSectionFrame* junction = nullptr;
  for (const CrossSectionFrame& f : plan.frames)
    if (f.kind == SectionKind::bifurcation) junction = &f;
  REQUIRE(junction != nullptr);

  TemplateGraph t = build_bifurcation_template(*junction);
  REQUIRE(t.p == kBifurcationPoints);
  for (int32_t k = kPipePoints; k < t.p; ++k) CHECK(t.rho[static_cast<size_t>(k)] == 1.0);

  // Pipe frames are rejected.
  CHECK_THROWS_AS(build_bifurcation_template(plan.frames[0]), Error);
}

TEST_CASE("template world points and local coords agree with the frame") {
  Skeleton s = parse_skeleton(gt::kYTree, "inline");
  FramePlan plan = build_frames(s, 0.5);
  const CrossSectionFrame& f = plan.frames[0];
  const TemplateGraph& t = pipe_template();

  std::vector<Vec3> pts = template_world_points(t, f);
  REQUIRE(pts.size() == static_cast<size_t>(t.p));
  CHECK(norm(pts[0] - f.center) < 1e-12);
  for (int32_t k = 0; k < t.p; ++k) {
    const double d = norm(pts[static_cast<size_t>(k)] - f.center);
    CHECK(d == doctest::Approx(f.radius * t.rho[static_cast<size_t>(k)]).epsilon(1e-9));
  }

  std::vector<double> coords;
  template_local_coords(t, coords);
  REQUIRE(coords.size() == static_cast<size_t>(t.p) * 3);
  for (int32_t k = 0; k < t.p; ++k) {
    CHECK(coords[static_cast<size_t>(k) * 3] == t.rho[static_cast<size_t>(k)]);
    CHECK(coords[static_cast<size_t>(k) * 3 + 1] ==
          doctest::Approx(std::cos(t.theta[static_cast<size_t>(k)])));
    CHECK(coords[static_cast<size_t>(k) * 3 + 2] ==
          doctest::Approx(std::sin(t.theta[static_cast<size_t>(k)])));
  }
}

TEST_CASE("global graph bookkeeping is consistent") {
  GlobalGraph g = gt::y_graph();
  REQUIRE(g.c > 10);
  CHECK(g.kinds.size() == static_cast<size_t>(g.c));
  CHECK(g.point_offset.size() == static_cast<size_t>(g.c));
  CHECK(g.arc.size() == static_cast<size_t>(g.c));
  CHECK(g.a_hat.n == g.c);

  int64_t expect = 0;
  for (int32_t s = 0; s < g.c; ++s) {
    CHECK(g.point_offset[static_cast<size_t>(s)] == expect);
    expect += g.section_points(s);
    CHECK(g.section_template(s).p == g.section_points(s));
  }
  CHECK(g.total_points == expect);

  const std::vector<int64_t> bounds = section_bounds(g);
  CHECK(bounds.size() == static_cast<size_t>(g.c) + 1);
  CHECK(bounds.front() == 0);
  CHECK(bounds.back() == g.total_points);

  // c_feature is arc normalized into [0, 1] with the far tip at 1.
  double cmax = 0.0;
  for (int32_t s = 0; s < g.c; ++s) {
    CHECK(g.c_feature[static_cast<size_t>(s)] >= 0.0);
    CHECK(g.c_feature[static_cast<size_t>(s)] <= 1.0);
    cmax = std::max(cmax, g.c_feature[static_cast<size_t>(s)]);
  }
  CHECK(cmax == doctest::Approx(1.0));
  CHECK(g.inlets.size() == 1);
  CHECK(g.outlets.size() == 2);

  // Exactly one junction section on the Y tree.
  int bifs = 0;
  for (SectionKind k : g.kinds)
    if (k == SectionKind::bifurcation) ++bifs;
  CHECK(bifs == 1);
}

TEST_CASE("geometry construction is deterministic") {
  GlobalGraph a = gt::y_graph();
  GlobalGraph b = gt::y_graph();
  CHECK(a.c == b.c);
  CHECK(a.arc == b.arc);
  CHECK(a.a_hat.vals == b.a_hat.vals);
  for (size_t i = 0; i < a.plan.frames.size(); ++i) {
    CHECK(a.plan.frames[i].center == b.plan.frames[i].center);
    CHECK(a.plan.frames[i].e1 == b.plan.frames[i].e1);
  }
}

TEST_SUITE_END();
