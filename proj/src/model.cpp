#include "ptpb/model.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

#include "ptpb/exceptions.hpp"
#include "ptpb/linalg.hpp"
#include "ptpb/rng.hpp"

namespace ptpb {

namespace {

void check_dof(const char* what, Eigen::Index got, int dof) {
  if (got != dof)
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(dof) +
                         ", got " + std::to_string(got));
}

}  // namespace

Mat PlanarArm::mass(const Vec& q) const {
  check_dof("PlanarArm::mass", q.size(), dof());
  const double c2 = std::cos(q[1]);
  const double a1 = p_.inertia1 + p_.inertia2 + p_.m1 * p_.lc1 * p_.lc1 +
                    p_.m2 * (p_.l1 * p_.l1 + p_.lc2 * p_.lc2);
  const double a2 = p_.m2 * p_.l1 * p_.lc2;
  const double a3 = p_.inertia2 + p_.m2 * p_.lc2 * p_.lc2;
  Mat m(2, 2);
  m(0, 0) = a1 + 2.0 * a2 * c2;
  m(0, 1) = a3 + a2 * c2;
  m(1, 0) = m(0, 1);
  m(1, 1) = a3;
  return m;
}

Mat PlanarArm::coriolis(const Vec& q, const Vec& dq) const {
  check_dof("PlanarArm::coriolis q", q.size(), dof());
  check_dof("PlanarArm::coriolis dq", dq.size(), dof());
  const double h = -p_.m2 * p_.l1 * p_.lc2 * std::sin(q[1]);
  Mat c(2, 2);
  c(0, 0) = h * dq[1];
  c(0, 1) = h * (dq[0] + dq[1]);
  c(1, 0) = -h * dq[0];
  c(1, 1) = 0.0;
  return c;
}

Vec PlanarArm::gravity(const Vec& q) const {
  check_dof("PlanarArm::gravity", q.size(), dof());
  const double g = p_.gravity;
  const double c1 = std::cos(q[0]);
  const double c12 = std::cos(q[0] + q[1]);
  Vec out(2);
  out[0] = (p_.m1 * p_.lc1 + p_.m2 * p_.l1) * g * c1 + p_.m2 * p_.lc2 * g * c12;
  out[1] = p_.m2 * p_.lc2 * g * c12;
  return out;
}

Vec PlanarArm::friction(const Vec& dq) const {
  check_dof("PlanarArm::friction", dq.size(), dof());
  Vec out(2);
  out[0] = p_.damping1 * dq[0];
  out[1] = p_.damping2 * dq[1];
  return out;
}

double PlanarArm::energy(const JointState& s) const {
  check_dof("PlanarArm::energy q", s.q.size(), dof());
  check_dof("PlanarArm::energy dq", s.dq.size(), dof());
  const double kinetic = 0.5 * s.dq.dot(mass(s.q) * s.dq);
  const double s1 = std::sin(s.q[0]);
  const double s12 = std::sin(s.q[0] + s.q[1]);
  const double potential =
      p_.m1 * p_.gravity * p_.lc1 * s1 + p_.m2 * p_.gravity * (p_.l1 * s1 + p_.lc2 * s12);
  return kinetic + potential;
}

Vec forward_dynamics(const DynamicsProvider& model, const JointState& s, const Vec& u,
                     const Vec& d) {
  const int n = model.dof();
  check_dof("forward_dynamics q", s.q.size(), n);
  check_dof("forward_dynamics dq", s.dq.size(), n);
  check_dof("forward_dynamics u", u.size(), n);
  check_dof("forward_dynamics d", d.size(), n);
  if (!all_finite(s.q) || !all_finite(s.dq) || !all_finite(u) || !all_finite(d))
    throw InvalidArgumentError("forward_dynamics: non-finite inputs");

  const Mat m = model.mass(s.q);
  const Vec rhs =
      u - model.coriolis(s.q, s.dq) * s.dq - model.gravity(s.q) - model.friction(s.dq) - d;
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success)
    throw SingularMassError("forward_dynamics: mass matrix not positive definite");
  return llt.solve(rhs);
}

void validate_bounds(const ModelBounds& b) {
  if (!(b.mass_eig_lower > 0.0) || !(b.mass_eig_upper >= b.mass_eig_lower))
    throw InvalidArgumentError("model bounds: inertia eigenvalue range invalid");
  if (!(b.minv_eig_lower > 0.0) || !(b.minv_eig_upper >= b.minv_eig_lower))
    throw InvalidArgumentError("model bounds: inverse-inertia eigenvalue range invalid");
  if (!(b.coriolis_gain >= 0.0) || !(b.gravity_max >= 0.0) || !(b.friction_gain >= 0.0))
    throw InvalidArgumentError("model bounds: norm envelopes must be nonnegative");
}

ModelBounds estimate_bounds(const DynamicsProvider& model, const ConstraintBox& box, int samples,
                            double safety, std::uint64_t seed) {
  validate_box(box);
  if (box.dof() != model.dof())
    throw DimensionError("estimate_bounds: box dimension does not match model dof");
  if (samples < 1) throw InvalidArgumentError("estimate_bounds: samples must be >= 1");
  if (!(safety >= 1.0)) throw InvalidArgumentError("estimate_bounds: safety factor must be >= 1");

  Rng rng(seed);
  double m_lo = std::numeric_limits<double>::infinity();
  double m_hi = 0.0;
  double c_gain = 0.0;
  double g_max = 0.0;
  double f_gain = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Vec q = rng.uniform_vec(box.q_lo, box.q_hi);
    const Vec dq = rng.uniform_vec(box.dq_lo, box.dq_hi);
    const EigRange eig = symmetric_eig_range(model.mass(q));
    if (!(eig.lo > 0.0))
      throw SingularMassError("estimate_bounds: mass matrix not positive definite in box");
    m_lo = std::min(m_lo, eig.lo);
    m_hi = std::max(m_hi, eig.hi);
    const double speed = dq.norm();
    if (speed > 1e-12) {
      c_gain = std::max(c_gain, spectral_norm(model.coriolis(q, dq)) / speed);
      f_gain = std::max(f_gain, model.friction(dq).norm() / speed);
    }
    g_max = std::max(g_max, model.gravity(q).norm());
  }

  ModelBounds b;
  b.mass_eig_upper = m_hi * safety;
  b.mass_eig_lower = m_lo / safety;
  b.minv_eig_upper = 1.0 / b.mass_eig_lower;
  b.minv_eig_lower = 1.0 / b.mass_eig_upper;
  b.coriolis_gain = c_gain * safety;
  b.gravity_max = g_max * safety;
  b.friction_gain = f_gain * safety;
  validate_bounds(b);
  return b;
}

}  // namespace ptpb
