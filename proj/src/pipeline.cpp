#include "ptpb/pipeline.hpp"

#include <cmath>
#include <string>

#include "ptpb/exceptions.hpp"

namespace ptpb {

namespace {

void check_same_size(const char* what, const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw DimensionError(std::string(what) + ": mismatched dimensions " +
                         std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

}  // namespace

double min_funnel_slope(const ConstraintBox& box) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < box.dof(); ++i)
    worst = std::max(worst, (box.dq_hi[i] - box.dq_lo[i]) / (box.q_hi[i] - box.q_lo[i]));
  return worst;
}

void validate_gains(const GainSet& gains, const ConstraintBox& box) {
  if (gains.kp.size() != box.dof())
    throw InvalidArgumentError("gains: kp dimension does not match the constraint box");
  if (!(gains.kp.minCoeff() > 0.0))
    throw InvalidArgumentError("gains: all kp entries must be positive");
  if (!(gains.rho > 0.0)) throw InvalidArgumentError("gains: rho must be positive");
  if (!(gains.varpi > 0.0)) throw InvalidArgumentError("gains: varpi must be positive");
  if (!(gains.gamma > 0.0)) throw InvalidArgumentError("gains: gamma must be positive");
  if (!(gains.alpha > 0.0) || gains.alpha * kSignedStackNorm > 1.0 + 1e-15)
    throw InvalidArgumentError("gains: alpha must lie in (0, 1/sqrt(2)]");
  if (!(gains.margin >= 0.0)) throw InvalidArgumentError("gains: margin must be nonnegative");
  const double slope_floor = min_funnel_slope(box);
  if (!(gains.kappa > slope_floor))
    throw InvalidArgumentError(
        "gains: kappa must satisfy kappa > max_i (dq_hi_i - dq_lo_i)/(q_hi_i - q_lo_i) = " +
        std::to_string(slope_floor) + ", got " + std::to_string(gains.kappa));
}

Reference Reference::setpoint(Vec q_star) {
  if (q_star.size() == 0) throw DimensionError("reference: empty set-point");
  Reference r;
  r.setpoint_ = true;
  r.a_ = std::move(q_star);
  r.w_ = Vec::Zero(r.a_.size());
  r.ph_ = Vec::Zero(r.a_.size());
  return r;
}

Reference Reference::sinusoid(Vec amplitude, Vec omega, Vec phase) {
  if (amplitude.size() == 0 || amplitude.size() != omega.size() ||
      amplitude.size() != phase.size())
    throw DimensionError("reference: sinusoid vectors must be nonempty and equally sized");
  Reference r;
  r.setpoint_ = false;
  r.a_ = std::move(amplitude);
  r.w_ = std::move(omega);
  r.ph_ = std::move(phase);
  return r;
}

Vec Reference::q(double t) const {
  if (setpoint_) return a_;
  Vec out(a_.size());
  for (Eigen::Index i = 0; i < a_.size(); ++i) out[i] = a_[i] * std::sin(w_[i] * t + ph_[i]);
  return out;
}

Vec Reference::dq(double t) const {
  if (setpoint_) return Vec::Zero(a_.size());
  Vec out(a_.size());
  for (Eigen::Index i = 0; i < a_.size(); ++i)
    out[i] = a_[i] * w_[i] * std::cos(w_[i] * t + ph_[i]);
  return out;
}

Vec Reference::ddq(double t) const {
  if (setpoint_) return Vec::Zero(a_.size());
  Vec out(a_.size());
  for (Eigen::Index i = 0; i < a_.size(); ++i)
    out[i] = -a_[i] * w_[i] * w_[i] * std::sin(w_[i] * t + ph_[i]);
  return out;
}

const Vec& Reference::target() const {
  if (!setpoint_) throw InvalidArgumentError("reference: target() requires a set-point");
  return a_;
}

ErrorPair tracking_error(const Reference& ref, double t, const JointState& state) {
  if (state.q.size() != ref.dof() || state.dq.size() != ref.dof())
    throw DimensionError("tracking_error: state dimension does not match the reference");
  return ErrorPair{state.q - ref.q(t), state.dq - ref.dq(t)};
}

ShiftedErrors transformed_error(const TransitionProfile& profile, double t, const Vec& e,
                                const Vec& de) {
  check_same_size("transformed_error", e, de);
  const ErrorRefs refs = error_refs(profile, t);
  check_same_size("transformed_error vs profile", e, refs.e);
  return ShiftedErrors{e - refs.e, de - refs.de};
}

Vec filtered_error(const GainSet& gains, const Vec& eps, const Vec& deps) {
  check_same_size("filtered_error", eps, deps);
  check_same_size("filtered_error gains", eps, gains.kp);
  return deps + gains.kp.cwiseProduct(eps);
}

VelocityCorridor velocity_corridor(const ConstraintBox& box, const GainSet& gains, const Vec& qr,
                                   const Vec& dqr, const Vec& e) {
  const Eigen::Index n = box.dof();
  if (qr.size() != n || dqr.size() != n || e.size() != n)
    throw DimensionError("velocity_corridor: dimension mismatch");
  VelocityCorridor c;
  c.lo.resize(n);
  c.hi.resize(n);
  c.lo_slope.assign(static_cast<std::size_t>(n), 0);
  c.hi_slope.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e_lo = box.q_lo[i] - qr[i];
    const double e_hi = box.q_hi[i] - qr[i];
    const double de_lo = box.dq_lo[i] - dqr[i];
    const double de_hi = box.dq_hi[i] - dqr[i];
    const double slope_lo = gains.kappa * (e_lo - e[i]);
    const double slope_hi = gains.kappa * (e_hi - e[i]);
    // Ties select the first argument (the velocity-box branch) so that branch
    // bookkeeping is deterministic.
    if (de_lo >= slope_lo) {
      c.lo[i] = de_lo;
    } else {
      c.lo[i] = slope_lo;
      c.lo_slope[static_cast<std::size_t>(i)] = 1;
    }
    if (de_hi <= slope_hi) {
      c.hi[i] = de_hi;
    } else {
      c.hi[i] = slope_hi;
      c.hi_slope[static_cast<std::size_t>(i)] = 1;
    }
  }
  return c;
}

Vec signed_stack(const Vec& chi) {
  Vec out(2 * chi.size());
  out.head(chi.size()) = -chi;
  out.tail(chi.size()) = chi;
  return out;
}

CorridorMargins corridor_margins(const ConstraintBox& box, const GainSet& gains,
                                 const TransitionProfile& profile, const Reference& ref, double t,
                                 const JointState& state) {
  const Eigen::Index n = box.dof();
  const ErrorPair err = tracking_error(ref, t, state);
  const ErrorRefs refs = error_refs(profile, t);
  const ShiftedErrors shifted{err.e - refs.e, err.de - refs.de};
  const VelocityCorridor corr =
      velocity_corridor(box, gains, ref.q(t), ref.dq(t), err.e);

  CorridorMargins m;
  m.lo_slope = corr.lo_slope;
  m.hi_slope = corr.hi_slope;
  const Vec kp_eps = gains.kp.cwiseProduct(shifted.eps);
  m.phi_lo = (corr.lo - refs.de) + kp_eps;
  m.phi_hi = (corr.hi - refs.de) + kp_eps;
  m.stacked0.resize(2 * n);
  m.stacked0.head(n) = -m.phi_lo;
  m.stacked0.tail(n) = m.phi_hi;
  m.stacked.resize(2 * n);
  m.stacked.head(n) = -(m.phi_lo.array() + gains.margin).matrix();
  m.stacked.tail(n) = (m.phi_hi.array() - gains.margin).matrix();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (m.phi_hi[i] - gains.margin < m.phi_lo[i] + gains.margin)
      throw InfeasibleMarginError(
          "corridor margins: shrunk band empty at joint " + std::to_string(i + 1) +
          " (margin " + std::to_string(gains.margin) + " exceeds half the corridor width)");
  }
  return m;
}

Vec constraint_filter_rate(const GainSet& gains, const Vec& xi, const Vec& chi) {
  if (xi.size() != 2 * chi.size())
    throw DimensionError("constraint_filter_rate: xi must have twice the size of chi");
  return -gains.gamma * xi + gains.gamma * gains.alpha * signed_stack(chi);
}

Vec recover_filter_state(const Vec& upsilon, const Vec& chi, const Vec& phi) {
  if (upsilon.size() != 2 * chi.size() || phi.size() != upsilon.size())
    throw DimensionError("recover_filter_state: dimension mismatch");
  return signed_stack(chi) + upsilon.cwiseProduct(upsilon) - phi;
}

Vec sqrt_filter_rate(const GainSet& gains, const Vec& upsilon, const Vec& chi, const Vec& dchi,
                     const Vec& phi, const Vec& dphi) {
  if (upsilon.size() != 2 * chi.size() || phi.size() != upsilon.size() ||
      dphi.size() != upsilon.size() || dchi.size() != chi.size())
    throw DimensionError("sqrt_filter_rate: dimension mismatch");
  for (Eigen::Index i = 0; i < upsilon.size(); ++i) {
    if (std::abs(upsilon[i]) < kSqrtScaleFloor)
      throw SingularScaleError("sqrt filter: scale entry " + std::to_string(i + 1) +
                               " below floor " + std::to_string(kSqrtScaleFloor));
  }
  const Vec xi = recover_filter_state(upsilon, chi, phi);
  const Vec forcing = -gains.gamma * xi + gains.gamma * gains.alpha * signed_stack(chi) + dphi -
                      signed_stack(dchi);
  return 0.5 * forcing.cwiseQuotient(upsilon);
}

Vec initial_sqrt_state(const Vec& phi_t0) {
  Vec out(phi_t0.size());
  for (Eigen::Index i = 0; i < phi_t0.size(); ++i) {
    if (phi_t0[i] < 0.0)
      throw InvalidArgumentError("initial sqrt state: negative margin component " +
                                 std::to_string(i + 1));
    out[i] = std::sqrt(phi_t0[i]);
  }
  return out;
}

Vec corridor_margin_rate(const ConstraintBox& box, const GainSet& gains,
                         const TransitionProfile& profile, const Reference& ref, double t,
                         const JointState& state, const Vec& ddq, double t_min, double step) {
  const Eigen::Index n = box.dof();
  const auto probe = [&](double dt_probe) {
    JointState s{state.q + dt_probe * state.dq, state.dq + dt_probe * ddq};
    return corridor_margins(box, gains, profile, ref, t + dt_probe, s);
  };
  const CorridorMargins center = corridor_margins(box, gains, profile, ref, t, state);
  const bool has_minus = (t - step) >= t_min;
  const CorridorMargins plus = probe(step);
  const CorridorMargins minus = has_minus ? probe(-step) : center;

  const auto branch = [n](const CorridorMargins& m, Eigen::Index j) {
    return j < n ? m.lo_slope[static_cast<std::size_t>(j)]
                 : m.hi_slope[static_cast<std::size_t>(j - n)];
  };

  Vec rate(2 * n);
  for (Eigen::Index j = 0; j < 2 * n; ++j) {
    const unsigned char bc = branch(center, j);
    const bool plus_same = branch(plus, j) == bc;
    const bool minus_same = has_minus && branch(minus, j) == bc;
    if (minus_same && plus_same) {
      rate[j] = (plus.stacked[j] - minus.stacked[j]) / (2.0 * step);
    } else if (plus_same) {
      rate[j] = (plus.stacked[j] - center.stacked[j]) / step;
    } else if (minus_same) {
      rate[j] = (center.stacked[j] - minus.stacked[j]) / step;
    } else if (has_minus) {
      rate[j] = (plus.stacked[j] - minus.stacked[j]) / (2.0 * step);
    } else {
      rate[j] = (plus.stacked[j] - center.stacked[j]) / step;
    }
  }
  return rate;
}

}  // namespace ptpb
