#include "galds/integrators.hpp"

#include "galds/error.hpp"

namespace galds {

Integrator integrator_from_name(const std::string& name) {
  if (name == "rk4") return Integrator::rk4;
  if (name == "euler") return Integrator::euler;
  if (name == "midpoint") return Integrator::midpoint;
  fail(ErrorCode::usage, "unknown integrator '" + name + "'");
}

std::string integrator_name(Integrator s) {
  switch (s) {
    case Integrator::rk4: return "rk4";
    case Integrator::euler: return "euler";
    case Integrator::midpoint: return "midpoint";
  }
  return "rk4";
}

std::vector<double> explicit_step(Integrator scheme, const RhsFn& rhs, double t,
                                  double dt, const std::vector<double>& y) {
  const size_t n = y.size();
  std::vector<double> k1(n), out(n);
  rhs(t, y, k1);
  switch (scheme) {
    case Integrator::euler: {
      for (size_t i = 0; i < n; ++i) out[i] = y[i] + dt * k1[i];
      return out;
    }
    case Integrator::midpoint: {
      std::vector<double> mid(n), k2(n);
      for (size_t i = 0; i < n; ++i) mid[i] = y[i] + 0.5 * dt * k1[i];
      rhs(t + 0.5 * dt, mid, k2);
      for (size_t i = 0; i < n; ++i) out[i] = y[i] + dt * k2[i];
      return out;
    }
    case Integrator::rk4: {
      std::vector<double> tmp(n), k2(n), k3(n), k4(n);
      for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
      rhs(t + 0.5 * dt, tmp, k2);
      for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
      rhs(t + 0.5 * dt, tmp, k3);
      for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + dt * k3[i];
      rhs(t + dt, tmp, k4);
      for (size_t i = 0; i < n; ++i)
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      return out;
    }
  }
  return out;
}

}  // namespace galds
