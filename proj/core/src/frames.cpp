#include "galds/frames.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "galds/error.hpp"

namespace galds {

namespace {

constexpr double kNormalEps = 1e-8;

// Fixed-axis fallback for straight runs: project the world axis least aligned
// with the tangent into the section plane.
Vec3 fallback_e1(const Vec3& t) {
  Vec3 axes[3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  int best = 0;
  double best_dot = std::abs(t[0]);
  for (int i = 1; i < 3; ++i) {
    double d = std::abs(t[static_cast<size_t>(i)]);
    if (d < best_dot) {
      best_dot = d;
      best = i;
    }
  }
  Vec3 a = axes[best];
  return normalized(a - dot(a, t) * t);
}

void set_frame_basis(CrossSectionFrame& f, const Vec3& n_raw) {
  Vec3 in_plane = n_raw - dot(n_raw, f.tangent) * f.tangent;
  if (norm(in_plane) < kNormalEps) {
    f.e1 = fallback_e1(f.tangent);
  } else {
    f.e1 = normalized(in_plane);
  }
  f.e2 = cross(f.tangent, f.e1);
}

struct Branch {
  std::vector<int32_t> nodes;  // skeleton indices, start..end
  bool starts_at_root = false;
};

struct Sampled {
  std::vector<Vec3> pos;
  std::vector<double> radius;
  std::vector<double> s;
  std::vector<Vec3> tangent;
  std::vector<double> curvature;
  std::vector<Vec3> normal_raw;
  double length = 0.0;
};

Sampled resample_branch(const Skeleton& sk, const std::vector<int32_t>& nodes,
                        double spacing) {
  std::vector<double> arc(nodes.size(), 0.0);
  for (size_t i = 1; i < nodes.size(); ++i) {
    double seg = norm(sk.nodes[static_cast<size_t>(nodes[i])].pos -
                      sk.nodes[static_cast<size_t>(nodes[i - 1])].pos);
    if (seg <= 0.0) fail(ErrorCode::validation, "zero-length skeleton segment");
    arc[i] = arc[i - 1] + seg;
  }
  Sampled out;
  out.length = arc.back();
  int32_t m = std::max<int32_t>(2, static_cast<int32_t>(std::llround(out.length / spacing)) + 1);
  out.pos.resize(static_cast<size_t>(m));
  out.radius.resize(static_cast<size_t>(m));
  out.s.resize(static_cast<size_t>(m));
  size_t seg_at = 0;
  for (int32_t k = 0; k < m; ++k) {
    double s = out.length * k / (m - 1);
    out.s[static_cast<size_t>(k)] = s;
    while (seg_at + 2 < arc.size() && arc[seg_at + 1] < s) ++seg_at;
    double denom = arc[seg_at + 1] - arc[seg_at];
    double w = (s - arc[seg_at]) / denom;
    w = std::clamp(w, 0.0, 1.0);
    const SkeletonNode& a = sk.nodes[static_cast<size_t>(nodes[seg_at])];
    const SkeletonNode& b = sk.nodes[static_cast<size_t>(nodes[seg_at + 1])];
    out.pos[static_cast<size_t>(k)] = (1.0 - w) * a.pos + w * b.pos;
    out.radius[static_cast<size_t>(k)] = (1.0 - w) * a.radius + w * b.radius;
  }
  // Tangents by centered differences, one-sided at the ends.
  out.tangent.resize(static_cast<size_t>(m));
  for (int32_t k = 0; k < m; ++k) {
    int32_t lo = std::max(0, k - 1);
    int32_t hi = std::min(m - 1, k + 1);
    out.tangent[static_cast<size_t>(k)] =
        normalized(out.pos[static_cast<size_t>(hi)] - out.pos[static_cast<size_t>(lo)]);
  }
  // Curvature as tangent turning rate; endpoints copy their neighbor.
  out.curvature.assign(static_cast<size_t>(m), 0.0);
  out.normal_raw.assign(static_cast<size_t>(m), Vec3{0, 0, 0});
  for (int32_t k = 1; k + 1 < m; ++k) {
    Vec3 dt = out.tangent[static_cast<size_t>(k + 1)] - out.tangent[static_cast<size_t>(k - 1)];
    double ds = out.s[static_cast<size_t>(k + 1)] - out.s[static_cast<size_t>(k - 1)];
    out.curvature[static_cast<size_t>(k)] = norm(dt) / ds;
    out.normal_raw[static_cast<size_t>(k)] = dt;
  }
  if (m > 2) {
    out.curvature[0] = out.curvature[1];
    out.curvature[static_cast<size_t>(m - 1)] = out.curvature[static_cast<size_t>(m - 2)];
    out.normal_raw[0] = out.normal_raw[1];
    out.normal_raw[static_cast<size_t>(m - 1)] = out.normal_raw[static_cast<size_t>(m - 2)];
  }
  return out;
}

}  // namespace

FramePlan build_frames(const Skeleton& sk, double spacing) {
  if (spacing <= 0.0) fail(ErrorCode::validation, "frame spacing must be positive");
  if (sk.size() < 2) fail(ErrorCode::validation, "skeleton needs at least two nodes");
  for (int32_t i = 0; i < sk.size(); ++i) {
    size_t nc = sk.children[static_cast<size_t>(i)].size();
    if (nc > 2)
      fail(ErrorCode::validation,
           "node " + std::to_string(i) + " has " + std::to_string(nc) +
               " children; only bifurcations are supported");
  }
  if (sk.children[static_cast<size_t>(sk.root)].size() != 1)
    fail(ErrorCode::validation, "root must start a single trunk (inlet)");

  // Maximal chains between root / junctions / leaves, in DFS preorder. Child
  // branches start at their junction node so no geometry is skipped.
  struct Pending {
    int32_t start;        // root, or the junction node
    int32_t first_child;  // -1 for the root branch
    int32_t parent_branch;
  };
  std::vector<Branch> branches;
  std::vector<int32_t> branch_parent;
  std::vector<Pending> stack;
  stack.push_back({sk.root, -1, -1});
  while (!stack.empty()) {
    Pending pend = stack.back();
    stack.pop_back();
    Branch b;
    b.starts_at_root = (pend.first_child < 0);
    b.nodes.push_back(pend.start);
    int32_t at = pend.start;
    if (pend.first_child >= 0) {
      at = pend.first_child;
      b.nodes.push_back(at);
    }
    while (sk.children[static_cast<size_t>(at)].size() == 1) {
      at = sk.children[static_cast<size_t>(at)][0];
      b.nodes.push_back(at);
    }
    if (b.nodes.size() < 2)
      fail(ErrorCode::validation, "degenerate single-node branch");
    int32_t bidx = static_cast<int32_t>(branches.size());
    branches.push_back(std::move(b));
    branch_parent.push_back(pend.parent_branch);
    const auto& end_children = sk.children[static_cast<size_t>(at)];
    if (end_children.size() == 2) {
      // Push in reverse so the lower-index child is processed first.
      stack.push_back({at, end_children[1], bidx});
      stack.push_back({at, end_children[0], bidx});
    }
  }

  double min_len = std::numeric_limits<double>::max();
  std::vector<Sampled> sampled;
  sampled.reserve(branches.size());
  for (const Branch& b : branches) {
    sampled.push_back(resample_branch(sk, b.nodes, spacing));
    min_len = std::min(min_len, sampled.back().length);
  }
  if (spacing > min_len * (1.0 + 1e-9))
    fail(ErrorCode::validation, "spacing coarser than the shortest branch");

  FramePlan plan;
  std::vector<int32_t> branch_first_frame(branches.size(), -1);
  std::vector<int32_t> branch_last_frame(branches.size(), -1);
  std::vector<double> branch_start_arc(branches.size(), 0.0);
  std::vector<bool> branch_ends_at_junction(branches.size(), false);
  for (size_t bi = 0; bi < branches.size(); ++bi) {
    const Branch& b = branches[bi];
    const Sampled& sm = sampled[bi];
    int32_t parent_b = branch_parent[bi];
    double start_arc = 0.0;
    int32_t attach_frame = -1;
    if (parent_b >= 0) {
      attach_frame = branch_last_frame[static_cast<size_t>(parent_b)];
      start_arc = plan.frames[static_cast<size_t>(attach_frame)].arc_to_root;
    }
    branch_start_arc[bi] = start_arc;
    bool ends_at_junction =
        sk.children[static_cast<size_t>(b.nodes.back())].size() == 2;
    branch_ends_at_junction[bi] = ends_at_junction;

    int32_t m = static_cast<int32_t>(sm.pos.size());
    int32_t first_k = b.starts_at_root ? 0 : 1;  // junction frame emitted by parent branch
    int32_t prev_frame = attach_frame;
    for (int32_t k = first_k; k < m; ++k) {
      CrossSectionFrame f;
      f.center = sm.pos[static_cast<size_t>(k)];
      f.tangent = sm.tangent[static_cast<size_t>(k)];
      f.radius = sm.radius[static_cast<size_t>(k)];
      f.curvature = sm.curvature[static_cast<size_t>(k)];
      f.arc_to_root = start_arc + sm.s[static_cast<size_t>(k)];
      f.branch = static_cast<int32_t>(bi);
      f.kind = (k == m - 1 && ends_at_junction) ? SectionKind::bifurcation : SectionKind::pipe;
      set_frame_basis(f, sm.normal_raw[static_cast<size_t>(k)]);
      int32_t fidx = static_cast<int32_t>(plan.frames.size());
      plan.frames.push_back(f);
      if (k == first_k) branch_first_frame[bi] = fidx;
      if (prev_frame >= 0) plan.section_edges.push_back({prev_frame, fidx});
      prev_frame = fidx;
    }
    branch_last_frame[bi] = prev_frame;
    if (!ends_at_junction) plan.outlets.push_back(prev_frame);
  }

  // Junction frames: record child directions and align the tangent with the
  // normalized mean of the incoming and outgoing directions.
  for (size_t bi = 0; bi < branches.size(); ++bi) {
    if (!branch_ends_at_junction[bi]) continue;
    int32_t jframe = branch_last_frame[bi];
    CrossSectionFrame& f = plan.frames[static_cast<size_t>(jframe)];
    Vec3 mean_dir = f.tangent;
    for (size_t ci = 0; ci < branches.size(); ++ci) {
      if (branch_parent[ci] != static_cast<int32_t>(bi)) continue;
      const Sampled& child = sampled[ci];
      Vec3 d = normalized(child.pos[1] - child.pos[0]);
      if (f.n_children < 2) f.child_dir[f.n_children] = d;
      ++f.n_children;
      mean_dir = mean_dir + d;
    }
    f.tangent = normalized(mean_dir);
    Vec3 n_raw = {0, 0, 0};
    // Preserve the turning direction recorded on the parent branch.
    const Sampled& psm = sampled[bi];
    n_raw = psm.normal_raw[psm.normal_raw.size() - 1];
    set_frame_basis(f, n_raw);
  }

  plan.inlet = 0;
  return plan;
}

}  // namespace galds
