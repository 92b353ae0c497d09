#include "ptpb/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptpb/exceptions.hpp"
#include "ptpb/rng.hpp"
#include "ptpb/transition.hpp"

namespace ptpb {

namespace {

/// Largest distance from q_star to a corner of the position box.
double box_corner_distance(const ConstraintBox& box, const Vec& q_star) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < box.dof(); ++i) {
    const double d = std::max(box.q_hi[i] - q_star[i], q_star[i] - box.q_lo[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

/// Acceleration demand of a candidate start against its own settling profile.
double accel_demand(double T, const Vec& q_star, const JointState& s) {
  return (kBlendAccelGain1 / (T * T)) * (s.q - q_star).norm() +
         (kBlendAccelGain2 / T) * s.dq.norm();
}

void check_setup(const ModelBounds& bounds, const ConstraintBox& box, const Vec& q_star) {
  validate_bounds(bounds);
  validate_box(box);
  if (q_star.size() != box.dof())
    throw DimensionError("feasibility: q_star dimension does not match the box");
}

}  // namespace

RateEnvelope rate_envelope(const ModelBounds& bounds, const ConstraintBox& box) {
  validate_bounds(bounds);
  validate_box(box);
  const double v = velocity_budget(box);
  const double accel =
      bounds.minv_eig_upper *
      ((bounds.coriolis_gain * v + bounds.friction_gain) * v + bounds.gravity_max);
  return RateEnvelope{std::sqrt(v * v + accel * accel), bounds.minv_eig_upper};
}

double t_star(const ModelBounds& bounds, const ConstraintBox& box, double eps_ball,
              const JointState& x_ref, const JointState& worst_x0) {
  if (!(eps_ball >= 0.0)) throw InvalidArgumentError("t_star: eps_ball must be nonnegative");
  if (x_ref.q.size() != worst_x0.q.size() || x_ref.dq.size() != worst_x0.dq.size())
    throw DimensionError("t_star: state dimensions mismatch");
  const RateEnvelope env = rate_envelope(bounds, box);
  const double speed = env.f_bar + env.g_bar * input_budget(box);
  Vec diff(x_ref.q.size() + x_ref.dq.size());
  diff << worst_x0.q - x_ref.q, worst_x0.dq - x_ref.dq;
  return std::max(0.0, diff.norm() - eps_ball) / speed;
}

SigmaBounds sigma_bounds(const ModelBounds& bounds, const ConstraintBox& box, double T,
                         const Vec& q_star) {
  check_setup(bounds, box, q_star);
  if (!(T > 0.0)) throw InvalidArgumentError("sigma_bounds: horizon must be positive");

  // Largest settling-reference rate over box starts, using per-axis maxima
  // (position offset and velocity range independently at their extremes).
  double offset_inf = 0.0;
  double speed_inf = 0.0;
  for (Eigen::Index i = 0; i < box.dof(); ++i) {
    offset_inf = std::max(offset_inf, std::max(box.q_hi[i] - q_star[i], q_star[i] - box.q_lo[i]));
    speed_inf = std::max(speed_inf, std::max(box.dq_hi[i], -box.dq_lo[i]));
  }
  const double ref_rate_max = (kBlendRateGain / T) * offset_inf + speed_inf;

  const double width_inf = (box.q_hi - box.q_lo).lpNorm<Eigen::Infinity>();
  const double v = velocity_budget(box);
  SigmaBounds sb;
  sb.lower = 2.0 * std::max(v, ref_rate_max) / width_inf;
  const double drift = (bounds.coriolis_gain * v + bounds.friction_gain) * v + bounds.gravity_max;
  sb.upper = (input_budget(box) - drift) / (bounds.mass_eig_upper * v);
  return sb;
}

double authority_threshold(const ModelBounds& bounds, const ConstraintBox& box, double sigma) {
  validate_bounds(bounds);
  validate_box(box);
  const double v = velocity_budget(box);
  return (bounds.coriolis_gain * v + bounds.friction_gain) * v + bounds.gravity_max +
         sigma * bounds.mass_eig_upper * v;
}

double viable_radius(const ModelBounds& bounds, const ConstraintBox& box, double T,
                     double u_star_val, double sigma) {
  if (!(T > 0.0)) throw InvalidArgumentError("viable_radius: horizon must be positive");
  const double eta = authority_threshold(bounds, box, sigma);
  return std::max(0.0, T * T * (u_star_val - eta) / (kBlendAccelGain1 * bounds.mass_eig_upper));
}

bool viable_membership(const ModelBounds& bounds, const ConstraintBox& box, double T,
                       double u_star_val, const Vec& q_star, double sigma,
                       const JointState& state) {
  check_setup(bounds, box, q_star);
  if (!(T > 0.0)) throw InvalidArgumentError("viable_membership: horizon must be positive");
  const SigmaBounds sb = sigma_bounds(bounds, box, T, q_star);
  if (!(sigma >= sb.lower && sigma < sb.upper))
    throw InvalidSigmaError("viable_membership: sigma " + std::to_string(sigma) +
                            " outside [" + std::to_string(sb.lower) + ", " +
                            std::to_string(sb.upper) + ")");

  if (!inside_position_box(box, state.q, /*strict=*/false)) return false;

  // Funnel conditions against the candidate's own settling profile: the
  // profile starts at the candidate's error/rate, so deps vanishes at t0 and
  // the conditions reduce to box-sign checks; kept literal for clarity.
  const TransitionProfile profile{0.0, T, state.q - q_star, state.dq};
  const ErrorRefs refs = error_refs(profile, 0.0);
  const Vec deps = state.dq - refs.de;
  for (Eigen::Index i = 0; i < box.dof(); ++i) {
    if (-deps[i] + sigma * (box.q_hi[i] - state.q[i]) < 0.0) return false;
    if (deps[i] + sigma * (state.q[i] - box.q_lo[i]) < 0.0) return false;
  }

  const double eta = authority_threshold(bounds, box, sigma);
  return accel_demand(T, q_star, state) <= (u_star_val - eta) / bounds.mass_eig_upper;
}

Authority control_authority(const ModelBounds& bounds, const ConstraintBox& box, double T,
                            double u_star_val, const Vec& q_star, double sigma,
                            ZeroVelocitySlice) {
  check_setup(bounds, box, q_star);
  const double radius = viable_radius(bounds, box, T, u_star_val, sigma);
  if (!(radius > 0.0))
    throw EmptyRegionError("control_authority: zero-velocity slice is empty (no authority margin)");
  const double reach = std::min(radius, box_corner_distance(box, q_star));
  const double max_demand = (kBlendAccelGain1 / (T * T)) * reach;
  Authority a;
  a.u_min = authority_threshold(bounds, box, sigma) + bounds.mass_eig_upper * max_demand;
  a.d_bar = std::max(0.0, u_star_val - a.u_min);
  return a;
}

Authority control_authority(const ModelBounds& bounds, const ConstraintBox& box, double T,
                            double u_star_val, const Vec& q_star, double sigma,
                            const std::vector<JointState>& region) {
  check_setup(bounds, box, q_star);
  if (region.empty()) throw EmptyRegionError("control_authority: empty sample region");
  double max_demand = 0.0;
  for (const JointState& s : region) max_demand = std::max(max_demand, accel_demand(T, q_star, s));
  Authority a;
  a.u_min = authority_threshold(bounds, box, sigma) + bounds.mass_eig_upper * max_demand;
  a.d_bar = std::max(0.0, u_star_val - a.u_min);
  return a;
}

RegionSample monte_carlo_region(const std::function<bool(const JointState&)>& member,
                                const ConstraintBox& box, int sample_count, std::uint64_t seed) {
  validate_box(box);
  if (sample_count < 1) throw InvalidArgumentError("monte_carlo_region: sample_count must be >= 1");
  RegionSample out;
  out.total = sample_count;
  for (int k = 0; k < sample_count; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    JointState s;
    s.q = rng.uniform_vec(box.q_lo, box.q_hi);
    s.dq = rng.uniform_vec(box.dq_lo, box.dq_hi);
    if (member(s)) out.accepted.push_back(std::move(s));
  }
  out.ratio = static_cast<double>(out.accepted.size()) / static_cast<double>(sample_count);
  return out;
}

FeasibilityReport feasibility_report(const ModelBounds& bounds, const ConstraintBox& box,
                                     double T, const Vec& q_star, std::optional<double> sigma,
                                     double eps_ball) {
  check_setup(bounds, box, q_star);
  if (!(T > 0.0)) throw InvalidArgumentError("feasibility_report: horizon must be positive");

  FeasibilityReport r;
  const SigmaBounds sb = sigma_bounds(bounds, box, T, q_star);
  r.sigma_lower = sb.lower;
  r.sigma_upper = sb.upper;
  r.u_star = input_budget(box);
  const bool window_ok = sb.lower < sb.upper;
  if (sigma.has_value()) {
    if (window_ok && !(*sigma >= sb.lower && *sigma < sb.upper))
      throw InvalidSigmaError("feasibility_report: sigma " + std::to_string(*sigma) +
                              " outside [" + std::to_string(sb.lower) + ", " +
                              std::to_string(sb.upper) + ")");
    r.sigma = *sigma;
  } else {
    r.sigma = 0.5 * (sb.lower + sb.upper);
  }
  r.eta = authority_threshold(bounds, box, r.sigma);
  r.viable_radius = viable_radius(bounds, box, T, r.u_star, r.sigma);
  r.nonempty = window_ok && r.u_star > r.eta;

  // Horizon floor from the farthest box corner (position and velocity).
  JointState x_ref{q_star, Vec::Zero(box.dof())};
  JointState worst{Vec(box.dof()), Vec(box.dof())};
  for (Eigen::Index i = 0; i < box.dof(); ++i) {
    worst.q[i] = (box.q_hi[i] - q_star[i] >= q_star[i] - box.q_lo[i]) ? box.q_hi[i] : box.q_lo[i];
    worst.dq[i] = (box.dq_hi[i] >= -box.dq_lo[i]) ? box.dq_hi[i] : box.dq_lo[i];
  }
  r.t_star = t_star(bounds, box, eps_ball, x_ref, worst);

  if (r.nonempty) {
    const Authority a =
        control_authority(bounds, box, T, r.u_star, q_star, r.sigma, ZeroVelocitySlice{});
    r.u_min = a.u_min;
    r.d_bar = a.d_bar;
  } else {
    r.u_min = r.eta;
    r.d_bar = std::max(0.0, r.u_star - r.u_min);
  }
  return r;
}

}  // namespace ptpb
