#include "ptpb/transition.hpp"

#include "ptpb/exceptions.hpp"

namespace ptpb {

TransitionBasis transition_basis(double t0, double T, double t) {
  if (!(T > 0.0)) throw InvalidArgumentError("transition_basis: horizon must be positive");
  if (!(t >= t0)) throw InvalidArgumentError("transition_basis: time precedes window start");
  TransitionBasis b;
  const double s = t - t0;
  if (s >= T) return b;  // settled phase: all members zero

  const double s2 = s * s;
  const double s3 = s2 * s;
  const double s4 = s3 * s;
  const double s5 = s4 * s;
  const double T2 = T * T;
  const double T3 = T2 * T;
  const double T4 = T3 * T;
  const double T5 = T4 * T;

  b.h1 = 1.0 - 10.0 * s3 / T3 + 15.0 * s4 / T4 - 6.0 * s5 / T5;
  b.dh1 = -30.0 * s2 / T3 + 60.0 * s3 / T4 - 30.0 * s4 / T5;
  b.ddh1 = -60.0 * s / T3 + 180.0 * s2 / T4 - 120.0 * s3 / T5;
  b.h2 = s - 6.0 * s3 / T2 + 8.0 * s4 / T3 - 3.0 * s5 / T4;
  b.dh2 = 1.0 - 18.0 * s2 / T2 + 32.0 * s3 / T3 - 15.0 * s4 / T4;
  b.ddh2 = -36.0 * s / T2 + 96.0 * s2 / T3 - 60.0 * s3 / T4;
  return b;
}

ErrorRefs error_refs(const TransitionProfile& profile, double t) {
  if (profile.e0.size() == 0 || profile.e0.size() != profile.ed0.size())
    throw DimensionError("error_refs: e0/ed0 must be nonempty and equally sized");
  const TransitionBasis b = transition_basis(profile.t0, profile.T, t);
  ErrorRefs r;
  r.e = b.h1 * profile.e0 + b.h2 * profile.ed0;
  r.de = b.dh1 * profile.e0 + b.dh2 * profile.ed0;
  r.dde = b.ddh1 * profile.e0 + b.ddh2 * profile.ed0;
  return r;
}

TransitionEnvelopes transition_envelopes(const TransitionProfile& profile) {
  if (!(profile.T > 0.0))
    throw InvalidArgumentError("transition_envelopes: horizon must be positive");
  if (profile.e0.size() == 0 || profile.e0.size() != profile.ed0.size())
    throw DimensionError("transition_envelopes: e0/ed0 must be nonempty and equally sized");
  const double e0n = profile.e0.norm();
  const double ed0n = profile.ed0.norm();
  const double T = profile.T;
  TransitionEnvelopes env;
  env.e_bar = e0n + (kBlendCrossGain / T) * ed0n;
  env.de_bar = (kBlendRateGain / T) * e0n + ed0n;
  env.dde_bar = (kBlendAccelGain1 / (T * T)) * e0n + (kBlendAccelGain2 / T) * ed0n;
  return env;
}

}  // namespace ptpb
