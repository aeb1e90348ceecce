#include "galds/skeleton.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "galds/error.hpp"

namespace galds {

namespace {

std::string loc(const std::string& origin, int line) {
  return origin + ":" + std::to_string(line);
}

}  // namespace

Skeleton parse_skeleton(const std::string& text, const std::string& origin) {
  struct RawNode {
    int64_t id, parent;
    double x, y, z, r;
    int line;
  };
  std::vector<RawNode> raw;
  std::map<int64_t, int32_t> dense;  // original id -> dense index in first-appearance order

  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int64_t id, type, parent;
    double x, y, z, r;
    if (!(ls >> id)) continue;  // blank after comment strip
    if (!(ls >> type >> x >> y >> z >> r >> parent))
      fail(ErrorCode::validation, loc(origin, lineno) + ": malformed node line");
    std::string trailing;
    if (ls >> trailing)
      fail(ErrorCode::validation, loc(origin, lineno) + ": trailing tokens on node line");
    if (r <= 0.0)
      fail(ErrorCode::validation, loc(origin, lineno) + ": non-positive radius");
    if (dense.count(id))
      fail(ErrorCode::validation, loc(origin, lineno) + ": duplicate node id " + std::to_string(id));
    dense[id] = static_cast<int32_t>(raw.size());
    raw.push_back({id, parent, x, y, z, r, lineno});
  }
  if (raw.empty()) fail(ErrorCode::validation, origin + ": skeleton has no nodes");

  Skeleton s;
  s.nodes.resize(raw.size());
  s.children.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const RawNode& n = raw[i];
    SkeletonNode out;
    out.pos = {n.x, n.y, n.z};
    out.radius = n.r;
    if (n.parent == -1) {
      out.parent = -1;
      if (s.root >= 0)
        fail(ErrorCode::validation, loc(origin, n.line) + ": multiple root nodes");
      s.root = static_cast<int32_t>(i);
    } else {
      auto it = dense.find(n.parent);
      if (it == dense.end())
        fail(ErrorCode::validation,
             loc(origin, n.line) + ": unknown parent id " + std::to_string(n.parent));
      out.parent = it->second;
    }
    s.nodes[i] = out;
  }
  if (s.root < 0) fail(ErrorCode::validation, origin + ": no root node (parent -1)");

  for (int32_t i = 0; i < s.size(); ++i)
    if (s.nodes[static_cast<size_t>(i)].parent >= 0)
      s.children[static_cast<size_t>(s.nodes[static_cast<size_t>(i)].parent)].push_back(i);

  // Cycle / reachability check: every node must reach the root.
  for (int32_t i = 0; i < s.size(); ++i) {
    int32_t at = i;
    int32_t hops = 0;
    while (at != s.root) {
      at = s.nodes[static_cast<size_t>(at)].parent;
      if (++hops > s.size())
        fail(ErrorCode::validation, origin + ": parent cycle involving node index " + std::to_string(i));
    }
  }
  return s;
}

Skeleton load_skeleton(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open skeleton file '" + path.string() + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_skeleton(buf.str(), path.filename().string());
}

std::string serialize_skeleton(const Skeleton& s) {
  std::string out;
  char line[256];
  for (int32_t i = 0; i < s.size(); ++i) {
    const SkeletonNode& n = s.nodes[static_cast<size_t>(i)];
    int64_t parent = n.parent < 0 ? -1 : n.parent + 1;
    std::snprintf(line, sizeof line, "%d 0 %.17g %.17g %.17g %.17g %" PRId64 "\n", i + 1,
                  n.pos[0], n.pos[1], n.pos[2], n.radius, parent);
    out += line;
  }
  return out;
}

void save_skeleton(const Skeleton& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  os << serialize_skeleton(s);
  if (!os) fail(ErrorCode::io, "short write to '" + path.string() + "'");
}

}  // namespace galds
