#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "galds/global_graph.hpp"
#include "galds/inference.hpp"
#include "galds/vec3.hpp"

namespace galds {

// One named point array: components = 1 writes a SCALARS block, 3 a VECTORS
// block. values holds point-major rows.
struct VtkPointData {
  std::string name;
  int32_t components = 1;
  std::vector<double> values;
};

struct VtkPolyData {
  std::vector<Vec3> points;
  std::vector<std::array<int32_t, 2>> lines;
  std::vector<VtkPointData> arrays;
};

// Legacy ASCII polydata with one VERTICES cell per point plus the given line
// segments. Values are printed with enough digits to round-trip a float map.
void write_vtk_polydata(const std::filesystem::path& path, const VtkPolyData& data);

// Parser for the exact subset write_vtk_polydata emits, used to close the
// round trip in tests and to re-load exported maps.
VtkPolyData read_vtk_polydata(const std::filesystem::path& path);

// World-space geometry of a whole tree: template points per section and the
// template edges, plus one center-to-center segment per section adjacency.
void graph_geometry(const GlobalGraph& g, std::vector<Vec3>& points,
                    std::vector<std::array<int32_t, 2>>& lines);

// One snapshot of a prediction bundle as a point map: arrays `velocity`
// (world components), `n0`, `nplus`, and `relerr` when supplied (fraction of
// the exact-field range per point).
void export_snapshot_vtk(const std::filesystem::path& path, const GlobalGraph& g,
                         const PredictionBundle& bundle, int64_t t_index,
                         std::span<const double> relerr = {});

}  // namespace galds
