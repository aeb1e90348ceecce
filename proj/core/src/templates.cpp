#include "galds/templates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "galds/error.hpp"

namespace galds {

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

TemplateGraph base_17() {
  TemplateGraph t;
  t.p = kPipePoints;
  t.rho.assign(static_cast<size_t>(t.p), 0.0);
  t.theta.assign(static_cast<size_t>(t.p), 0.0);
  // 0: center; 1..8: inner ring r=R/2; 9..16: outer ring r=R, aligned angles.
  for (int32_t k = 0; k < kRingPoints; ++k) {
    double ang = kTau * k / kRingPoints;
    t.rho[static_cast<size_t>(1 + k)] = 0.5;
    t.theta[static_cast<size_t>(1 + k)] = ang;
    t.rho[static_cast<size_t>(9 + k)] = 1.0;
    t.theta[static_cast<size_t>(9 + k)] = ang;
  }
  for (int32_t k = 0; k < kRingPoints; ++k) {
    int32_t next = (k + 1) % kRingPoints;
    t.edges.push_back({0, 1 + k});                  // spokes center -> inner
    t.edges.push_back({1 + k, 1 + next});           // inner ring
    t.edges.push_back({1 + k, 9 + k});              // spokes inner -> outer
    t.edges.push_back({9 + k, 9 + next});           // outer ring
  }
  return t;
}

double angular_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), kTau);
  return std::min(d, kTau - d);
}

}  // namespace

const TemplateGraph& pipe_template() {
  static const TemplateGraph t = [] {
    TemplateGraph tpl = base_17();
    tpl.a_hat = dense_normalized_adjacency(tpl.p, tpl.edges);
    return tpl;
  }();
  return t;
}

TemplateGraph build_bifurcation_template(const CrossSectionFrame& frame) {
  if (frame.kind != SectionKind::bifurcation || frame.n_children < 2)
    fail(ErrorCode::validation, "bifurcation template requires a junction frame");
  TemplateGraph t = base_17();
  t.p = kBifurcationPoints;

  // Connector azimuths follow the in-plane projections of the child
  // directions; a child running normal to the plane falls back to 0 / pi.
  double child_az[2];
  for (int i = 0; i < 2; ++i) {
    const Vec3& d = frame.child_dir[i];
    double x = dot(d, frame.e1);
    double y = dot(d, frame.e2);
    if (std::hypot(x, y) < 1e-12) {
      child_az[i] = i == 0 ? 0.0 : std::numbers::pi;
    } else {
      child_az[i] = std::atan2(y, x);
    }
  }

  const double delta = kTau / 16.0;  // 22.5 degrees between sibling connectors
  for (int ci = 0; ci < 2; ++ci) {
    int32_t first = static_cast<int32_t>(t.rho.size());
    for (int j = -1; j <= 1; ++j) {
      t.rho.push_back(1.0);
      t.theta.push_back(child_az[ci] + j * delta);
    }
    // Sibling chain within the triple.
    t.edges.push_back({first, first + 1});
    t.edges.push_back({first + 1, first + 2});
    // Each connector joins its two angularly nearest outer-ring points.
    for (int j = 0; j < 3; ++j) {
      int32_t conn = first + j;
      std::array<std::pair<double, int32_t>, kRingPoints> cand;
      for (int32_t k = 0; k < kRingPoints; ++k)
        cand[static_cast<size_t>(k)] = {
            angular_distance(t.theta[static_cast<size_t>(conn)], kTau * k / kRingPoints), 9 + k};
      std::sort(cand.begin(), cand.end());
      t.edges.push_back({std::min(cand[0].second, conn), std::max(cand[0].second, conn)});
      t.edges.push_back({std::min(cand[1].second, conn), std::max(cand[1].second, conn)});
    }
  }
  t.a_hat = dense_normalized_adjacency(t.p, t.edges);
  return t;
}

TemplateGraph build_template(const CrossSectionFrame& frame) {
  if (frame.kind == SectionKind::pipe) return pipe_template();
  return build_bifurcation_template(frame);
}

std::vector<Vec3> template_world_points(const TemplateGraph& tpl,
                                        const CrossSectionFrame& frame) {
  std::vector<Vec3> out(static_cast<size_t>(tpl.p));
  for (int32_t i = 0; i < tpl.p; ++i) {
    double r = frame.radius * tpl.rho[static_cast<size_t>(i)];
    double th = tpl.theta[static_cast<size_t>(i)];
    out[static_cast<size_t>(i)] =
        frame.center + (r * std::cos(th)) * frame.e1 + (r * std::sin(th)) * frame.e2;
  }
  return out;
}

void template_local_coords(const TemplateGraph& tpl, std::vector<double>& out) {
  out.resize(static_cast<size_t>(tpl.p) * 3);
  for (int32_t i = 0; i < tpl.p; ++i) {
    out[static_cast<size_t>(i) * 3 + 0] = tpl.rho[static_cast<size_t>(i)];
    out[static_cast<size_t>(i) * 3 + 1] = std::cos(tpl.theta[static_cast<size_t>(i)]);
    out[static_cast<size_t>(i) * 3 + 2] = std::sin(tpl.theta[static_cast<size_t>(i)]);
  }
}

}  // namespace galds
