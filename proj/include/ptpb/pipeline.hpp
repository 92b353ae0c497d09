#pragma once

#include <numbers>
#include <vector>

#include "ptpb/constraints.hpp"
#include "ptpb/transition.hpp"
#include "ptpb/types.hpp"

namespace ptpb {

/// Spectral norm of the 2n x n signed stack [-I; I] used by the constraint law.
inline constexpr double kSignedStackNorm = std::numbers::sqrt2;

/// Controller gains. `margin` is the corridor safety margin; configuration
/// defaults it to `varpi`.
struct GainSet {
  Vec kp;              ///< diagonal entries of Kp, all > 0
  double rho = 1.0;    ///< adaptive gain scale, > 0
  double varpi = 1.0;  ///< barrier radius on ||chi||, > 0
  double gamma = 1.0;  ///< constraint-filter decay rate, > 0
  double alpha = 0.5;  ///< constraint-filter coupling, in (0, 1/sqrt(2)]
  double kappa = 1.0;  ///< position-to-velocity funnel slope, > 0
  double margin = 1.0; ///< corridor safety margin c, >= 0

  double kp_min() const { return kp.minCoeff(); }
  double kp_max() const { return kp.maxCoeff(); }
};

/// Smallest admissible funnel slope for a box: max_i (dq_hi - dq_lo)/(q_hi - q_lo).
double min_funnel_slope(const ConstraintBox& box);

/// Throws InvalidArgumentError when a gain violates its range, including
/// kappa <= min_funnel_slope(box) and alpha * sqrt(2) > 1.
void validate_gains(const GainSet& gains, const ConstraintBox& box);

/// Joint-space reference trajectory: a fixed set-point or per-joint sinusoids
/// q_i(t) = A_i sin(w_i t + phase_i).
class Reference {
 public:
  static Reference setpoint(Vec q_star);
  static Reference sinusoid(Vec amplitude, Vec omega, Vec phase);

  Eigen::Index dof() const { return a_.size(); }
  bool is_setpoint() const { return setpoint_; }

  Vec q(double t) const;
  Vec dq(double t) const;
  Vec ddq(double t) const;

  /// Set-point target; throws InvalidArgumentError for a sinusoid reference.
  const Vec& target() const;
  const Vec& amplitude() const { return a_; }
  const Vec& omega() const { return w_; }
  const Vec& phase() const { return ph_; }

 private:
  Reference() = default;
  bool setpoint_ = true;
  Vec a_;   ///< set-point target, or sinusoid amplitudes
  Vec w_;   ///< sinusoid angular frequencies [rad/s]
  Vec ph_;  ///< sinusoid phases [rad]
};

/// Raw tracking error e = q - q_r and its rate.
struct ErrorPair {
  Vec e;
  Vec de;
};
ErrorPair tracking_error(const Reference& ref, double t, const JointState& state);

/// Shifted errors eps = e - e_ref(t), deps = de - de_ref(t); both vanish at the
/// window start and coincide with (e, de) once the window has elapsed.
struct ShiftedErrors {
  Vec eps;
  Vec deps;
};
ShiftedErrors transformed_error(const TransitionProfile& profile, double t, const Vec& e,
                                const Vec& de);

/// Filtered error chi = deps + Kp * eps.
Vec filtered_error(const GainSet& gains, const Vec& eps, const Vec& deps);

/// Time-varying admissible band on the raw error rate. Each bound is the
/// tighter of the velocity box and the position funnel kappa * (distance to the
/// position bound); `lo_slope`/`hi_slope` record which branch is active
/// (1 = funnel, 0 = velocity box) for derivative bookkeeping.
struct VelocityCorridor {
  Vec lo;  ///< lower bound on de [rad/s]
  Vec hi;  ///< upper bound on de [rad/s]
  std::vector<unsigned char> lo_slope;
  std::vector<unsigned char> hi_slope;
};
VelocityCorridor velocity_corridor(const ConstraintBox& box, const GainSet& gains, const Vec& qr,
                                   const Vec& dqr, const Vec& e);

/// Margins translating the velocity corridor into bounds on the filtered error:
/// phi_lo <= chi <= phi_hi is equivalent to the corridor on de. `stacked0` is
/// (-phi_lo, phi_hi); `stacked` subtracts the safety margin from both sides.
struct CorridorMargins {
  Vec phi_lo;   ///< lower margin on chi (n)
  Vec phi_hi;   ///< upper margin on chi (n)
  Vec stacked0; ///< (-phi_lo, phi_hi) (2n)
  Vec stacked;  ///< (-(phi_lo + c), phi_hi - c) (2n)
  std::vector<unsigned char> lo_slope;
  std::vector<unsigned char> hi_slope;
};

/// Computes the corridor margins at time t from the measured state.
/// Throws InfeasibleMarginError when the shrunk band is empty, i.e. some
/// component has phi_hi - c < phi_lo + c.
CorridorMargins corridor_margins(const ConstraintBox& box, const GainSet& gains,
                                 const TransitionProfile& profile, const Reference& ref, double t,
                                 const JointState& state);

/// Signed stack D * chi = (-chi, chi).
Vec signed_stack(const Vec& chi);

/// Constraint-filter dynamics d(xi)/dt = -gamma * xi + gamma * alpha * D * chi.
/// The integrator owns the stepping; this supplies the derivative.
Vec constraint_filter_rate(const GainSet& gains, const Vec& xi, const Vec& chi);

/// Square-root form of the constraint filter. Components of `upsilon` whose
/// magnitude falls below kSqrtScaleFloor make the update singular.
inline constexpr double kSqrtScaleFloor = 1e-9;

/// d(upsilon)/dt = (1/2) diag(upsilon)^{-1} (-gamma*xi + gamma*alpha*D*chi + dphi - D*dchi)
/// with xi recovered from the algebraic identity. Throws SingularScaleError
/// below the floor.
Vec sqrt_filter_rate(const GainSet& gains, const Vec& upsilon, const Vec& chi, const Vec& dchi,
                     const Vec& phi, const Vec& dphi);

/// xi = D*chi + upsilon .* upsilon - phi.
Vec recover_filter_state(const Vec& upsilon, const Vec& chi, const Vec& phi);

/// Componentwise square root of the initial margins, valid when all are >= 0.
/// Throws InvalidArgumentError otherwise.
Vec initial_sqrt_state(const Vec& phi_t0);

/// Time derivative of the stacked corridor margins along the flow (dq, ddq),
/// by finite differences with branch-switch detection: when the funnel/box
/// branch changes across the probe, the one-sided difference on the side that
/// matches the center branch is used. Probes never precede t_min.
Vec corridor_margin_rate(const ConstraintBox& box, const GainSet& gains,
                         const TransitionProfile& profile, const Reference& ref, double t,
                         const JointState& state, const Vec& ddq, double t_min,
                         double step = 1e-6);

}  // namespace ptpb
