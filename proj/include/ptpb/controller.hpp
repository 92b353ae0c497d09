#pragma once

#include "ptpb/constraints.hpp"
#include "ptpb/pipeline.hpp"
#include "ptpb/types.hpp"

namespace ptpb {

// This module deliberately has no dependency on the dynamics model: the control
// law uses only measured errors, gains, and the input box. Keep it that way.

/// Below this norm the command is defined by its continuous extension tau = 0.
inline constexpr double kChiZeroTol = 1e-12;

/// Adaptive scale Gamma = 4 * max{1, ||eps||, ||deps||, ||eps||*||deps||}.
double adaptive_scale(const Vec& eps, const Vec& deps);

/// Barrier gain K = rho * ||chi|| / (varpi - ||chi||).
/// Throws BarrierBreachError when ||chi|| >= varpi: the gain is unbounded there
/// and the run must fail loudly rather than clamp.
double barrier_gain(const GainSet& gains, const Vec& chi);

/// Unconstrained command tau = -K * (Gamma + ||xi|| * sqrt(2)) * chi / ||chi||,
/// extended continuously by tau = 0 at chi = 0.
Vec raw_command(const GainSet& gains, const Vec& chi, const Vec& eps, const Vec& deps,
                const Vec& xi);

/// Componentwise projection of tau into the input box.
Vec saturate(const ConstraintBox& box, const Vec& tau);

/// One control evaluation: scale, gain, command, and saturated input.
struct ControlOutput {
  Vec tau;             ///< unconstrained command [N m]
  Vec u;               ///< applied, saturated input [N m]
  double k_gain = 0.0; ///< barrier gain K
  double scale = 4.0;  ///< adaptive scale Gamma
};
ControlOutput control_step(const GainSet& gains, const ConstraintBox& box, const Vec& eps,
                           const Vec& deps, const Vec& chi, const Vec& xi);

}  // namespace ptpb
