#pragma once

#include <cstdint>

#include "ptpb/constraints.hpp"
#include "ptpb/types.hpp"

namespace ptpb {

/// Rigid-body dynamics in standard manipulator form
///   M(q) ddq + C(q, dq) dq + G(q) + F(dq) + d = u.
class DynamicsProvider {
 public:
  virtual ~DynamicsProvider() = default;

  virtual int dof() const = 0;

  /// Symmetric positive-definite inertia matrix M(q).
  virtual Mat mass(const Vec& q) const = 0;

  /// Coriolis/centrifugal matrix C(q, dq) chosen so that dM/dt - 2C is skew-symmetric.
  virtual Mat coriolis(const Vec& q, const Vec& dq) const = 0;

  /// Gravity torque vector G(q).
  virtual Vec gravity(const Vec& q) const = 0;

  /// Friction torque vector F(dq).
  virtual Vec friction(const Vec& dq) const = 0;
};

/// Physical parameters of the built-in two-link arm.
struct PlanarArmParams {
  double m1 = 1.0;               ///< link masses [kg]
  double m2 = 1.0;
  double l1 = 1.0;               ///< link lengths [m]
  double l2 = 1.0;
  double lc1 = 0.5;              ///< center-of-mass offsets along the links [m]
  double lc2 = 0.5;
  double inertia1 = 1.0 / 12.0;  ///< link inertias about their centers of mass [kg m^2]
  double inertia2 = 1.0 / 12.0;
  double gravity = 9.81;         ///< gravitational acceleration [m/s^2]
  double damping1 = 0.1;         ///< viscous joint friction [N m s/rad]
  double damping2 = 0.1;
};

/// Two-revolute-joint arm moving in a vertical plane. Joint angles are measured
/// from the horizontal axis (q = 0 means a link pointing along +x).
class PlanarArm final : public DynamicsProvider {
 public:
  PlanarArm() = default;
  explicit PlanarArm(const PlanarArmParams& params) : p_(params) {}

  int dof() const override { return 2; }
  Mat mass(const Vec& q) const override;
  Mat coriolis(const Vec& q, const Vec& dq) const override;
  Vec gravity(const Vec& q) const override;
  Vec friction(const Vec& dq) const override;

  /// Total mechanical energy (kinetic + gravitational potential), friction excluded.
  double energy(const JointState& s) const;

  const PlanarArmParams& params() const { return p_; }

 private:
  PlanarArmParams p_{};
};

/// Joint accelerations ddq = M(q)^{-1} (u - C dq - G - F - d), computed through a
/// Cholesky solve of M ddq = rhs (never by forming M^{-1}).
/// Throws SingularMassError when M(q) is not positive definite;
/// DimensionError / InvalidArgumentError on malformed inputs.
Vec forward_dynamics(const DynamicsProvider& model, const JointState& s, const Vec& u,
                     const Vec& d);

/// Conservative scalar envelopes of the dynamics over a constraint box.
struct ModelBounds {
  double mass_eig_lower = 0.0;   ///< lower bound on eigenvalues of M(q)
  double mass_eig_upper = 0.0;   ///< upper bound on eigenvalues of M(q)
  double minv_eig_lower = 0.0;   ///< lower bound on eigenvalues of M(q)^{-1}
  double minv_eig_upper = 0.0;   ///< upper bound on eigenvalues of M(q)^{-1}
  double coriolis_gain = 0.0;    ///< ||C(q, dq)|| <= coriolis_gain * ||dq||
  double gravity_max = 0.0;      ///< ||G(q)|| <= gravity_max
  double friction_gain = 0.0;    ///< ||F(dq)|| <= friction_gain * ||dq||
};

/// Validates that user-supplied bounds are internally consistent and positive.
void validate_bounds(const ModelBounds& b);

/// Deterministic sampled estimate of ModelBounds over the box, inflated by
/// `safety` (upper bounds multiplied, lower bounds divided). The inverse-inertia
/// range is derived from the inflated inertia range, so minv_eig_upper equals
/// 1 / mass_eig_lower exactly. Throws EmptyBoxError on an invalid box and
/// InvalidArgumentError for samples < 1 or safety < 1.
ModelBounds estimate_bounds(const DynamicsProvider& model, const ConstraintBox& box,
                            int samples = 16384, double safety = 1.1,
                            std::uint64_t seed = 0x5EEDB0B5u);

}  // namespace ptpb
