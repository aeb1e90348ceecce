#include "galds/velocity_field.hpp"

namespace galds {

VelocityField reconstruct_velocity(const GlobalGraph& g, const HydraulicSolution& h,
                                   double perturbation_scale) {
  VelocityField v;
  v.perturbation_scale = perturbation_scale;
  v.local.assign(static_cast<size_t>(g.total_points) * 3, 0.0);
  v.u1d.assign(static_cast<size_t>(g.section_count()) * 3, 0.0);

  for (int64_t s = 0; s < g.section_count(); ++s) {
    const CrossSectionFrame& f = g.plan.frames[s];
    const TemplateGraph& tpl = g.section_template(static_cast<int32_t>(s));
    const double uc = h.centerline_speed[s];
    v.u1d[s * 3] = uc;

    double* out = v.local.data() + g.point_offset[s] * 3;
    for (int32_t k = 0; k < tpl.p; ++k, out += 3) {
      const double rho = tpl.rho[k];
      const double shape = 1.0 - rho * rho;
      out[0] = uc * shape;
      out[1] = perturbation_scale * f.curvature * f.radius * uc * rho * shape;
      out[2] = 0.0;
    }
  }
  return v;
}

Vec3 local_to_world(const CrossSectionFrame& f, const double* local3) {
  return f.tangent * local3[0] + f.e1 * local3[1] + f.e2 * local3[2];
}

}  // namespace galds
