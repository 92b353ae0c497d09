#pragma once

#include <cmath>

#include "ptpb/types.hpp"

namespace ptpb {

/// Quintic blend values at one instant. h1 carries the initial error to zero
/// (h1 = 1, dh1 = ddh1 = 0 at the start; all derivatives through the second
/// vanish at the horizon), h2 does the same for the initial error rate
/// (h2 = 0, dh2 = 1 at the start). Both are identically zero past the horizon,
/// giving a C^2 junction with the settled phase.
struct TransitionBasis {
  double h1 = 0.0;
  double h2 = 0.0;
  double dh1 = 0.0;
  double dh2 = 0.0;
  double ddh1 = 0.0;
  double ddh2 = 0.0;
};

/// Evaluates the blend polynomials at time t for a window starting at t0 with
/// horizon T > 0. Throws InvalidArgumentError for t < t0 or T <= 0.
TransitionBasis transition_basis(double t0, double T, double t);

/// A settling window: initial error/error-rate are steered to zero over [t0, t0+T].
struct TransitionProfile {
  double t0 = 0.0;  ///< window start [s]
  double T = 1.0;   ///< settling horizon [s], > 0
  Vec e0;           ///< error at t0
  Vec ed0;          ///< error rate at t0
};

/// Error reference e^d(t) = h1(t) e0 + h2(t) ed0 and its first two derivatives.
struct ErrorRefs {
  Vec e;
  Vec de;
  Vec dde;
};
ErrorRefs error_refs(const TransitionProfile& profile, double t);

/// Envelope constants for the blend polynomials over the whole window:
/// sup|dh1| = kBlendRateGain / T, sup|ddh1| = kBlendAccelGain1 / T^2,
/// sup|ddh2| = kBlendAccelGain2 / T. kBlendCrossGain bounds the h2 channel of
/// the position envelope as kBlendCrossGain / T (valid for moderate horizons,
/// where it dominates the true sup|h2| = 16 T / 81).
inline constexpr double kBlendCrossGain = 2.0;
inline constexpr double kBlendRateGain = 15.0 / 8.0;
inline const double kBlendAccelGain1 = 10.0 * std::sqrt(3.0) / 3.0;
inline const double kBlendAccelGain2 = (152.0 * std::sqrt(19.0) + 224.0) / 225.0;

/// Uniform bounds on ||e^d||, ||de^d/dt||, ||d2e^d/dt2|| over the window.
struct TransitionEnvelopes {
  double e_bar = 0.0;
  double de_bar = 0.0;
  double dde_bar = 0.0;
};
TransitionEnvelopes transition_envelopes(const TransitionProfile& profile);

}  // namespace ptpb
