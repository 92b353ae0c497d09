#include "ptpb/controller.hpp"

#include <algorithm>
#include <string>

#include "ptpb/exceptions.hpp"

namespace ptpb {

double adaptive_scale(const Vec& eps, const Vec& deps) {
  const double a = eps.norm();
  const double b = deps.norm();
  return 4.0 * std::max({1.0, a, b, a * b});
}

double barrier_gain(const GainSet& gains, const Vec& chi) {
  const double c = chi.norm();
  if (c >= gains.varpi)
    throw BarrierBreachError("barrier gain: ||chi|| = " + std::to_string(c) +
                             " reached the barrier radius " + std::to_string(gains.varpi));
  return gains.rho * c / (gains.varpi - c);
}

Vec raw_command(const GainSet& gains, const Vec& chi, const Vec& eps, const Vec& deps,
                const Vec& xi) {
  const double c = chi.norm();
  if (c < kChiZeroTol) return Vec::Zero(chi.size());
  const double k = barrier_gain(gains, chi);
  const double magnitude = k * (adaptive_scale(eps, deps) + xi.norm() * kSignedStackNorm);
  return (-magnitude / c) * chi;
}

Vec saturate(const ConstraintBox& box, const Vec& tau) {
  if (tau.size() != box.dof()) throw DimensionError("saturate: dimension mismatch");
  Vec u(tau.size());
  for (Eigen::Index i = 0; i < tau.size(); ++i)
    u[i] = std::clamp(tau[i], box.u_lo[i], box.u_hi[i]);
  return u;
}

ControlOutput control_step(const GainSet& gains, const ConstraintBox& box, const Vec& eps,
                           const Vec& deps, const Vec& chi, const Vec& xi) {
  ControlOutput out;
  out.scale = adaptive_scale(eps, deps);
  out.k_gain = barrier_gain(gains, chi);
  out.tau = raw_command(gains, chi, eps, deps, xi);
  out.u = saturate(box, out.tau);
  return out;
}

}  // namespace ptpb
