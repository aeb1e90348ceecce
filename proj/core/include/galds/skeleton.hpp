#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace galds {

struct SkeletonNode {
  std::array<double, 3> pos{};
  double radius = 0.0;
  int32_t parent = -1;  // -1 marks the root
};

// Centerline tree in micrometers. Nodes are stored densely; children lists
// are derived and sorted by child index so traversals are deterministic.
struct Skeleton {
  std::vector<SkeletonNode> nodes;
  int32_t root = -1;
  std::vector<std::vector<int32_t>> children;

  int32_t size() const { return static_cast<int32_t>(nodes.size()); }
};

// Text format, one node per line: `id type x y z radius parent`, parent -1
// for the root, `#` comments. The type column is read and ignored. Arbitrary
// id ordering (forward references) is accepted; ids are re-mapped densely in
// first-appearance order.
Skeleton parse_skeleton(const std::string& text, const std::string& origin);
Skeleton load_skeleton(const std::filesystem::path& path);
std::string serialize_skeleton(const Skeleton& s);
void save_skeleton(const Skeleton& s, const std::filesystem::path& path);

}  // namespace galds
