#include "galds/vtk_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "galds/error.hpp"
#include "galds/templates.hpp"
#include "galds/velocity_field.hpp"

namespace galds {
namespace {

constexpr const char* kHeader = "# vtk DataFile Version 3.0";

void print_row(std::ofstream& out, const double* v, int32_t n) {
  char buf[32];
  for (int32_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof(buf), "%.12g", v[i]);
    out << buf << (i + 1 < n ? ' ' : '\n');
  }
}

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) fail(ErrorCode::io, std::string("vtk parse: missing ") + what);
  return tok;
}

int64_t next_count(std::istream& in, const char* what) {
  const std::string tok = next_token(in, what);
  try {
    return std::stoll(tok);
  } catch (const std::exception&) {
    fail(ErrorCode::io, std::string("vtk parse: bad count for ") + what);
  }
}

double next_value(std::istream& in, const char* what) {
  const std::string tok = next_token(in, what);
  try {
    return std::stod(tok);
  } catch (const std::exception&) {
    fail(ErrorCode::io, std::string("vtk parse: bad value in ") + what);
  }
}

}  // namespace

void write_vtk_polydata(const std::filesystem::path& path, const VtkPolyData& data) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write " + path.string());
  const int64_t n = std::ssize(data.points);
  out << kHeader << "\n";
  out << "galds fields\n";
  out << "ASCII\n";
  out << "DATASET POLYDATA\n";
  out << "POINTS " << n << " double\n";
  for (const Vec3& p : data.points) print_row(out, p.data(), 3);
  out << "VERTICES " << n << " " << 2 * n << "\n";
  for (int64_t i = 0; i < n; ++i) out << "1 " << i << "\n";
  if (!data.lines.empty()) {
    out << "LINES " << data.lines.size() << " " << 3 * data.lines.size() << "\n";
    for (const auto& l : data.lines) out << "2 " << l[0] << " " << l[1] << "\n";
  }
  if (!data.arrays.empty()) {
    out << "POINT_DATA " << n << "\n";
    for (const VtkPointData& a : data.arrays) {
      if (std::ssize(a.values) != n * a.components)
        fail(ErrorCode::validation, "vtk array " + a.name + " does not match the point count");
      if (a.components == 1) {
        out << "SCALARS " << a.name << " double 1\n";
        out << "LOOKUP_TABLE default\n";
      } else if (a.components == 3) {
        out << "VECTORS " << a.name << " double\n";
      } else {
        fail(ErrorCode::validation, "vtk arrays are scalar or 3-vector");
      }
      for (int64_t i = 0; i < n; ++i)
        print_row(out, a.values.data() + i * a.components, a.components);
    }
  }
  if (!out) fail(ErrorCode::io, "short write to " + path.string());
}

VtkPolyData read_vtk_polydata(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kHeader)
    fail(ErrorCode::io, "vtk parse: unexpected header line");
  std::getline(in, line);  // title, free text
  if (!std::getline(in, line) || line != "ASCII") fail(ErrorCode::io, "vtk parse: expected ASCII");
  if (!std::getline(in, line) || line != "DATASET POLYDATA")
    fail(ErrorCode::io, "vtk parse: expected DATASET POLYDATA");

  VtkPolyData data;
  std::string tok;
  while (in >> tok) {
    if (tok == "POINTS") {
      const int64_t n = next_count(in, "POINTS");
      next_token(in, "POINTS type");
      data.points.resize(n);
      for (Vec3& p : data.points)
        for (double& c : p) c = next_value(in, "POINTS");
    } else if (tok == "VERTICES") {
      const int64_t cells = next_count(in, "VERTICES");
      next_count(in, "VERTICES size");
      for (int64_t i = 0; i < cells; ++i) {
        if (next_count(in, "vertex arity") != 1) fail(ErrorCode::io, "vtk parse: vertex arity");
        next_count(in, "vertex index");
      }
    } else if (tok == "LINES") {
      const int64_t cells = next_count(in, "LINES");
      next_count(in, "LINES size");
      data.lines.resize(cells);
      for (auto& l : data.lines) {
        if (next_count(in, "line arity") != 2) fail(ErrorCode::io, "vtk parse: line arity");
        l[0] = static_cast<int32_t>(next_count(in, "line index"));
        l[1] = static_cast<int32_t>(next_count(in, "line index"));
      }
    } else if (tok == "POINT_DATA") {
      next_count(in, "POINT_DATA");
    } else if (tok == "SCALARS" || tok == "VECTORS") {
      VtkPointData a;
      a.name = next_token(in, "array name");
      a.components = tok == "SCALARS" ? 1 : 3;
      next_token(in, "array type");
      if (tok == "SCALARS") {
        next_token(in, "component count");
        if (next_token(in, "LOOKUP_TABLE") != "LOOKUP_TABLE")
          fail(ErrorCode::io, "vtk parse: expected LOOKUP_TABLE");
        next_token(in, "table name");
      }
      const int64_t n = std::ssize(data.points);
      a.values.resize(n * a.components);
      for (double& v : a.values) v = next_value(in, a.name.c_str());
      data.arrays.push_back(std::move(a));
    } else {
      fail(ErrorCode::io, "vtk parse: unexpected token " + tok);
    }
  }
  return data;
}

void graph_geometry(const GlobalGraph& g, std::vector<Vec3>& points,
                    std::vector<std::array<int32_t, 2>>& lines) {
  points.clear();
  points.reserve(g.total_points);
  lines.clear();
  for (int32_t s = 0; s < g.section_count(); ++s) {
    const TemplateGraph& tpl = g.section_template(s);
    const std::vector<Vec3> world = template_world_points(tpl, g.frame(s));
    const int32_t base = g.point_offset[s];
    points.insert(points.end(), world.begin(), world.end());
    for (const auto& e : tpl.edges) lines.push_back({base + e.first, base + e.second});
  }
  // Center-to-center segments make the axial ordering visible in the map.
  for (const auto& e : g.edges)
    lines.push_back({g.point_offset[e.first], g.point_offset[e.second]});
}

void export_snapshot_vtk(const std::filesystem::path& path, const GlobalGraph& g,
                         const PredictionBundle& bundle, int64_t t_index,
                         std::span<const double> relerr) {
  const int64_t n = g.total_points;
  if (t_index < 0 || t_index >= std::ssize(bundle.times))
    fail(ErrorCode::validation, "snapshot index out of range");
  if (std::ssize(bundle.velocity) != n * 3 || std::ssize(bundle.n0) < (t_index + 1) * n)
    fail(ErrorCode::validation, "bundle does not match the geometry");

  VtkPolyData data;
  graph_geometry(g, data.points, data.lines);

  VtkPointData vel{"velocity", 3, std::vector<double>(n * 3)};
  for (int32_t s = 0; s < g.section_count(); ++s) {
    const CrossSectionFrame& f = g.frame(s);
    const int32_t p = g.section_points(s);
    for (int32_t k = 0; k < p; ++k) {
      const int64_t row = g.point_offset[s] + k;
      const Vec3 w = local_to_world(f, bundle.velocity.data() + row * 3);
      std::copy(w.begin(), w.end(), vel.values.begin() + row * 3);
    }
  }
  data.arrays.push_back(std::move(vel));

  auto slice = [&](const std::vector<double>& series) {
    return std::vector<double>(series.begin() + t_index * n, series.begin() + (t_index + 1) * n);
  };
  data.arrays.push_back({"n0", 1, slice(bundle.n0)});
  data.arrays.push_back({"nplus", 1, slice(bundle.nplus)});
  if (!relerr.empty()) {
    if (std::ssize(relerr) != n)
      fail(ErrorCode::validation, "relerr array does not match the point count");
    data.arrays.push_back({"relerr", 1, {relerr.begin(), relerr.end()}});
  }
  write_vtk_polydata(path, data);
}

}  // namespace galds
