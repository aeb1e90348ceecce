#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "galds/global_graph.hpp"
#include "galds/rng.hpp"
#include "galds/skeleton.hpp"
#include "galds/tape.hpp"
#include "galds/tensor.hpp"

namespace galds::testing {

// Y-shaped tree, one bifurcation, roughly 16 um of total arc. Small enough
// that transport runs and training epochs stay in the millisecond range.
inline const char* kYTree = R"(# y tree
1 1 0 0 0 1.2 -1
2 1 3 0 0 1.15 1
3 1 6 0 0 1.1 2
4 1 8.5 1.8 0 1.0 3
5 1 11 3.6 0.4 0.95 4
6 1 8.5 -1.8 0 0.9 3
7 1 11 -3.6 -0.4 0.85 6
)";

// Straight pipe along x, constant radius.
inline std::string pipe_swc(double length, double radius, int nodes = 5) {
  std::string s = "# pipe\n";
  for (int i = 0; i < nodes; ++i) {
    const double x = length * i / (nodes - 1);
    s += std::to_string(i + 1) + " 1 " + std::to_string(x) + " 0 0 " +
         std::to_string(radius) + " " + std::to_string(i == 0 ? -1 : i) + "\n";
  }
  return s;
}

// Symmetric junction with configurable child radii, equal child lengths.
inline std::string fork_swc(double r_left, double r_right) {
  std::string s = "# fork\n";
  s += "1 1 0 0 0 1.2 -1\n";
  s += "2 1 4 0 0 1.2 1\n";
  s += "3 1 8 0 0 1.2 2\n";
  s += "4 1 12 3 0 " + std::to_string(r_left) + " 3\n";
  s += "5 1 16 6 0 " + std::to_string(r_left) + " 4\n";
  s += "6 1 12 -3 0 " + std::to_string(r_right) + " 3\n";
  s += "7 1 16 -6 0 " + std::to_string(r_right) + " 6\n";
  return s;
}

// Fresh scratch directory under the test working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path p = std::filesystem::current_path() / "scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline std::filesystem::path write_file(const std::filesystem::path& dir,
                                        const std::string& name, const std::string& text) {
  const std::filesystem::path p = dir / name;
  std::ofstream out(p);
  out << text;
  return p;
}

inline GlobalGraph y_graph(double spacing = 0.5) {
  return build_geometry(parse_skeleton(kYTree, "y-tree"), spacing);
}

// Central-difference gradient check. `build` must construct the loss on the
// given tape from the tensors' current values; gradients are compared against
// (f(x+h) - f(x-h)) / 2h entry by entry. Returns the worst relative error,
// with the denominator floored so near-zero gradient pairs compare absolutely.
inline double gradcheck(std::vector<Tensor*> params,
                        const std::function<Tape::Var(Tape&)>& build, double h = 1e-6) {
  for (Tensor* t : params) t->zero_grad();
  Tape tape;
  tape.backward(build(tape));
  std::vector<std::vector<double>> analytic;
  for (Tensor* t : params) analytic.push_back(t->grad());

  const auto eval = [&]() {
    Tape t2;
    return t2.scalar(build(t2));
  };
  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = *params[pi];
    for (int64_t i = 0; i < t.size(); ++i) {
      const double keep = t.at(i);
      t.at(i) = keep + h;
      const double fp = eval();
      t.at(i) = keep - h;
      const double fm = eval();
      t.at(i) = keep;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[pi][static_cast<size_t>(i)];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-4});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

// Uniform values bounded away from zero, for kink-free relu probing.
inline std::vector<double> random_values(Rng& rng, int64_t n, double lo = 0.2,
                                         double hi = 1.5) {
  std::vector<double> v(static_cast<size_t>(n));
  for (double& x : v) x = rng.uniform(lo, hi) * (rng.next_u64() % 2 ? 1.0 : -1.0);
  return v;
}

}  // namespace galds::testing
