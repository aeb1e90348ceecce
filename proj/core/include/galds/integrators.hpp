#pragma once

#include <functional>
#include <string>
#include <vector>

namespace galds {

enum class Integrator { rk4, euler, midpoint };

Integrator integrator_from_name(const std::string& name);
std::string integrator_name(Integrator s);

// dy must be resized by the callee to y.size().
using RhsFn =
    std::function<void(double t, const std::vector<double>& y, std::vector<double>& dy)>;

// One explicit step of the chosen scheme from (t, y) over dt.
std::vector<double> explicit_step(Integrator scheme, const RhsFn& rhs, double t,
                                  double dt, const std::vector<double>& y);

// Classical fourth-order Runge-Kutta step.
inline std::vector<double> rk4_step(const RhsFn& rhs, double t, double dt,
                                    const std::vector<double>& y) {
  return explicit_step(Integrator::rk4, rhs, t, dt, y);
}

}  // namespace galds
