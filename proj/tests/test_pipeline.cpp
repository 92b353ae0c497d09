#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ptpb/exceptions.hpp"
#include "ptpb/pipeline.hpp"
#include "ptpb/rng.hpp"

using namespace ptpb;

namespace {

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec vec4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

/// Symmetric two-joint box: position +-1 rad, velocity +-2 rad/s, input +-10.
ConstraintBox unit_box() {
  ConstraintBox box;
  box.q_lo = vec2(-1.0, -1.0);
  box.q_hi = vec2(1.0, 1.0);
  box.dq_lo = vec2(-2.0, -2.0);
  box.dq_hi = vec2(2.0, 2.0);
  box.u_lo = vec2(-10.0, -10.0);
  box.u_hi = vec2(10.0, 10.0);
  return box;
}

GainSet unit_gains() {
  GainSet g;
  g.kp = vec2(2.0, 3.0);
  g.rho = 1.0;
  g.varpi = 1.0;
  g.gamma = 1.0;
  g.alpha = 0.5;
  g.kappa = 3.0;
  g.margin = 0.0;
  return g;
}

}  // namespace

TEST_CASE("gain validation enforces every range") {
  const ConstraintBox box = unit_box();
  GainSet g = unit_gains();
  CHECK_NOTHROW(validate_gains(g, box));

  CHECK(min_funnel_slope(box) == doctest::Approx(2.0).epsilon(1e-15));

  GainSet bad = g;
  bad.kp = vec2(2.0, 0.0);
  CHECK_THROWS_AS(validate_gains(bad, box), InvalidArgumentError);
  bad = g;
  bad.rho = 0.0;
  CHECK_THROWS_AS(validate_gains(bad, box), InvalidArgumentError);
  bad = g;
  bad.varpi = -1.0;
  CHECK_THROWS_AS(validate_gains(bad, box), InvalidArgumentError);
  bad = g;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(validate_gains(bad, box), InvalidArgumentError);
  bad = g;
  bad.margin = -0.1;
  CHECK_THROWS_AS(validate_gains(bad, box), InvalidArgumentError);

  // The funnel slope must exceed the steepest velocity/position aspect ratio,
  // and the failure message must name the inequality with its computed floor.
  bad = g;
  bad.kappa = 2.0;
  try {
    validate_gains(bad, box);
    FAIL("kappa at the floor must be rejected");
  } catch (const InvalidArgumentError& err) {
    const std::string msg = err.what();
    CHECK(msg.find("kappa must satisfy") != std::string::npos);
    CHECK(msg.find("2.0") != std::string::npos);
  }

  // alpha is capped by the reciprocal of the stack norm sqrt(2).
  bad = g;
  bad.alpha = 0.75;
  CHECK_THROWS_AS(validate_gains(bad, box), InvalidArgumentError);
  bad.alpha = 1.0 / kSignedStackNorm;  // boundary admissible
  CHECK_NOTHROW(validate_gains(bad, box));
}

TEST_CASE("reference trajectories evaluate and validate") {
  const Reference sp = Reference::setpoint(vec2(0.3, -0.2));
  CHECK(sp.is_setpoint());
  CHECK((sp.q(12.0) - vec2(0.3, -0.2)).norm() == 0.0);
  CHECK(sp.dq(12.0).norm() == 0.0);
  CHECK(sp.ddq(12.0).norm() == 0.0);
  CHECK((sp.target() - vec2(0.3, -0.2)).norm() == 0.0);

  const Reference sin = Reference::sinusoid(vec2(0.3, 0.3), vec2(1.0, 1.0), vec2(0.0, kPi / 2));
  CHECK_FALSE(sin.is_setpoint());
  CHECK_THROWS_AS(sin.target(), InvalidArgumentError);
  const double t = 0.7;
  CHECK(sin.q(t)[0] == doctest::Approx(0.3 * std::sin(t)).epsilon(1e-15));
  CHECK(sin.q(t)[1] == doctest::Approx(0.3 * std::cos(t)).epsilon(1e-15));
  CHECK(sin.dq(t)[0] == doctest::Approx(0.3 * std::cos(t)).epsilon(1e-15));
  CHECK(sin.ddq(t)[0] == doctest::Approx(-0.3 * std::sin(t)).epsilon(1e-15));
  // Analytic derivatives agree with finite differences of q.
  const double h = 1e-6;
  CHECK(((sin.q(t + h) - sin.q(t - h)) / (2 * h) - sin.dq(t)).norm() <= 1e-9);
}

TEST_CASE("tracking error subtracts the reference") {
  const Reference sp = Reference::setpoint(vec2(0.0, 0.0));
  const JointState match{vec2(0.0, 0.0), vec2(0.0, 0.0)};
  const ErrorPair zero = tracking_error(sp, 1.0, match);
  CHECK(zero.e.norm() == 0.0);
  CHECK(zero.de.norm() == 0.0);

  const JointState off{vec2(0.1, 0.1), vec2(0.0, 0.0)};
  const ErrorPair uniform = tracking_error(sp, 1.0, off);
  CHECK((uniform.e - vec2(0.1, 0.1)).norm() == 0.0);

  // Equal per-joint offsets of 30 degrees give ||e|| = 30 deg * sqrt(2).
  const double off30 = deg2rad(30.0);
  const Reference sin = Reference::sinusoid(vec2(0.3, 0.3), vec2(1.0, 1.0), vec2(0.0, kPi / 2));
  const JointState shifted{sin.q(0.0) + vec2(off30, off30), sin.dq(0.0)};
  const ErrorPair e30 = tracking_error(sin, 0.0, shifted);
  CHECK(e30.e.norm() == doctest::Approx(off30 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(e30.de.norm() == 0.0);

  const JointState wrong{Vec::Zero(3), Vec::Zero(3)};
  CHECK_THROWS_AS(tracking_error(sp, 0.0, wrong), DimensionError);
}

TEST_CASE("transformed error vanishes at the window start and passes through after") {
  TransitionProfile p;
  p.t0 = 0.5;
  p.T = 2.0;
  p.e0 = vec2(0.4, -0.3);
  p.ed0 = vec2(-0.1, 0.2);

  const ShiftedErrors at0 = transformed_error(p, p.t0, p.e0, p.ed0);
  CHECK(at0.eps.norm() == 0.0);  // bit-exact: e - h1*e0 with h1 = 1 exactly
  CHECK(at0.deps.norm() == 0.0);

  const Vec e = vec2(0.05, 0.02);
  const Vec de = vec2(-0.01, 0.03);
  const ShiftedErrors after = transformed_error(p, p.t0 + p.T + 1.0, e, de);
  CHECK((after.eps - e).norm() == 0.0);
  CHECK((after.deps - de).norm() == 0.0);

  // Midpoint: subtracting the settling reference built from the same basis.
  const double tm = p.t0 + 1.0;
  const ErrorRefs refs = error_refs(p, tm);
  const ShiftedErrors mid = transformed_error(p, tm, e, de);
  CHECK((mid.eps - (e - refs.e)).norm() == 0.0);
  CHECK((mid.deps - (de - refs.de)).norm() == 0.0);
}

TEST_CASE("filtered error composes rate plus scaled offset") {
  GainSet g = unit_gains();
  const Vec chi = filtered_error(g, vec2(1.0, 1.0), vec2(0.0, 0.0));
  CHECK((chi - vec2(2.0, 3.0)).norm() == 0.0);

  const Vec pure_rate = filtered_error(g, vec2(0.0, 0.0), vec2(0.7, -0.4));
  CHECK((pure_rate - vec2(0.7, -0.4)).norm() == 0.0);

  // Window start: both shifted errors vanish, so chi is exactly zero.
  TransitionProfile p;
  p.t0 = 0.0;
  p.T = 1.0;
  p.e0 = vec2(0.2, 0.1);
  p.ed0 = vec2(0.0, -0.1);
  const ShiftedErrors s0 = transformed_error(p, 0.0, p.e0, p.ed0);
  CHECK(filtered_error(g, s0.eps, s0.deps).norm() == 0.0);
}

TEST_CASE("velocity corridor takes the tighter of box and funnel") {
  const ConstraintBox box = unit_box();
  GainSet g = unit_gains();  // kappa = 3
  const Vec qr = vec2(0.0, 0.0);
  const Vec dqr = vec2(0.0, 0.0);

  // Centered: the velocity box is the tighter bound on both sides.
  const VelocityCorridor centered = velocity_corridor(box, g, qr, dqr, vec2(0.0, 0.0));
  CHECK((centered.hi - vec2(2.0, 2.0)).norm() == 0.0);
  CHECK((centered.lo - vec2(-2.0, -2.0)).norm() == 0.0);
  CHECK(centered.hi_slope[0] == 0);
  CHECK(centered.lo_slope[0] == 0);

  // Near the upper position bound the funnel closes the upper rate.
  const VelocityCorridor near = velocity_corridor(box, g, qr, dqr, vec2(0.9, 0.0));
  CHECK(near.hi[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(near.hi_slope[0] == 1);
  CHECK(near.lo[0] == -2.0);  // far side still the box

  // At the bound the upper rate closes completely.
  const VelocityCorridor at = velocity_corridor(box, g, qr, dqr, vec2(1.0, 0.0));
  CHECK(at.hi[0] == 0.0);

  // Tie-break: exact equality selects the velocity-box branch.
  GainSet tie = g;
  tie.kappa = 2.0000000000000004;  // just above the floor for this box
  const VelocityCorridor eq = velocity_corridor(box, tie, qr, dqr, vec2(0.0, 0.0));
  CHECK(eq.hi[0] == 2.0);
  CHECK(eq.hi_slope[0] == 0);

  // A moving reference shifts both the position and velocity windows.
  const VelocityCorridor moved = velocity_corridor(box, g, vec2(0.5, 0.0), vec2(1.0, 0.0),
                                                   vec2(0.0, 0.0));
  CHECK(moved.hi[0] == doctest::Approx(1.0).epsilon(1e-14));       // min(2-1, 3*(1-0.5))
  CHECK(moved.lo[0] == doctest::Approx(-3.0).epsilon(1e-14));      // max(-2-1, 3*(-1-0.5))
  CHECK(moved.hi_slope[0] == 0);
  CHECK(moved.lo_slope[0] == 0);
}

TEST_CASE("corridor margins translate the corridor onto the filtered error") {
  const ConstraintBox box = unit_box();
  GainSet g = unit_gains();
  TransitionProfile p;
  p.t0 = 0.0;
  p.T = 1.0;
  p.e0 = vec2(0.0, 0.0);
  p.ed0 = vec2(0.0, 0.0);
  const Reference ref = Reference::setpoint(vec2(0.0, 0.0));

  // Settled symmetric case: margins are symmetric and equal to the box rate.
  const JointState centered{vec2(0.0, 0.0), vec2(0.0, 0.0)};
  const CorridorMargins m = corridor_margins(box, g, p, ref, 5.0, centered);
  CHECK((m.phi_hi - vec2(2.0, 2.0)).norm() == 0.0);
  CHECK((m.phi_lo - vec2(-2.0, -2.0)).norm() == 0.0);
  CHECK((m.stacked0 - vec4(2.0, 2.0, 2.0, 2.0)).norm() == 0.0);
  CHECK((m.stacked - m.stacked0).norm() == 0.0);  // c = 0

  // A margin c shrinks both sides of the stacked band.
  GainSet with_c = g;
  with_c.margin = 0.5;
  const CorridorMargins mc = corridor_margins(box, with_c, p, ref, 5.0, centered);
  CHECK((mc.stacked - vec4(1.5, 1.5, 1.5, 1.5)).norm() == 0.0);
  CHECK((mc.stacked0 - m.stacked0).norm() == 0.0);

  // Off-center state: phi picks up the Kp-scaled position error.
  const JointState off{vec2(0.5, 0.0), vec2(0.1, 0.0)};
  const CorridorMargins mo = corridor_margins(box, g, p, ref, 5.0, off);
  // e = 0.5: upper rate bound = min(2, 3*0.5) = 1.5, phi_hi = 1.5 + 2*0.5.
  CHECK(mo.phi_hi[0] == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(mo.phi_lo[0] == doctest::Approx(-2.0 + 1.0).epsilon(1e-14));
  CHECK(mo.hi_slope[0] == 1);
  CHECK(mo.lo_slope[0] == 0);

  // The shrunk band empties when twice the safety margin exceeds the corridor
  // width. The Kp-scaled offset shifts both sides equally, so only the width
  // matters: pinning the state at the position bound halves it (the funnel
  // closes the upper rate window) and c = 1.1 then empties the band, while the
  // same c is fine at the center and c = 0 is always feasible.
  GainSet fat = g;
  fat.margin = 1.1;
  const JointState pinned{vec2(1.0, 0.0), vec2(0.0, 0.0)};
  CHECK_THROWS_AS(corridor_margins(box, fat, p, ref, 5.0, pinned), InfeasibleMarginError);
  CHECK_NOTHROW(corridor_margins(box, fat, p, ref, 5.0, centered));
  CHECK_NOTHROW(corridor_margins(box, g, p, ref, 5.0, pinned));  // c = 0 keeps it feasible
}

TEST_CASE("signed stack doubles the error with opposite signs") {
  const Vec chi = vec2(0.3, -0.7);
  const Vec stacked = signed_stack(chi);
  CHECK((stacked - vec4(-0.3, 0.7, 0.3, -0.7)).norm() == 0.0);
  CHECK(stacked.norm() == doctest::Approx(kSignedStackNorm * chi.norm()).epsilon(1e-15));
}

TEST_CASE("constraint filter decays exponentially and settles at the coupled drive") {
  GainSet g = unit_gains();
  g.gamma = 2.0;
  g.alpha = 0.5;

  // With chi = 0 the filter is a pure per-component exponential decay:
  // integrate with RK4 and compare against the closed form.
  Vec xi = vec4(1.0, -0.5, 0.25, 2.0);
  const Vec xi0 = xi;
  const Vec chi0 = vec2(0.0, 0.0);
  const double dt = 1e-3;
  for (int k = 0; k < 1000; ++k) {
    const Vec k1 = constraint_filter_rate(g, xi, chi0);
    const Vec k2 = constraint_filter_rate(g, xi + 0.5 * dt * k1, chi0);
    const Vec k3 = constraint_filter_rate(g, xi + 0.5 * dt * k2, chi0);
    const Vec k4 = constraint_filter_rate(g, xi + dt * k3, chi0);
    xi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const Vec expected = xi0 * std::exp(-g.gamma * 1.0);
  CHECK((xi - expected).norm() <= 1e-10);

  // From rest the derivative is the coupled drive gamma * alpha * D chi.
  const Vec chi = vec2(0.4, -0.2);
  const Vec from_rest = constraint_filter_rate(g, Vec::Zero(4), chi);
  CHECK((from_rest - g.gamma * g.alpha * signed_stack(chi)).norm() == 0.0);

  // The fixed point under constant chi is alpha * D chi.
  const Vec fixed = g.alpha * signed_stack(chi);
  CHECK(constraint_filter_rate(g, fixed, chi).norm() <= 1e-15);
}

TEST_CASE("square-root filter reproduces the direct filter dynamics") {
  GainSet g = unit_gains();
  g.gamma = 1.7;
  g.alpha = 0.4;
  Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    Vec upsilon(4), chi(2), dchi(2), phi(4), dphi(4);
    for (int i = 0; i < 4; ++i) upsilon[i] = rng.uniform(0.2, 2.0);
    for (int i = 0; i < 2; ++i) chi[i] = rng.uniform(-0.5, 0.5);
    for (int i = 0; i < 2; ++i) dchi[i] = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < 4; ++i) phi[i] = rng.uniform(0.5, 3.0);
    for (int i = 0; i < 4; ++i) dphi[i] = rng.uniform(-1.0, 1.0);

    const Vec xi = recover_filter_state(upsilon, chi, phi);
    CHECK((xi - (signed_stack(chi) + upsilon.cwiseProduct(upsilon) - phi)).norm() == 0.0);

    // Differentiating the recovery identity must reproduce the direct rate:
    // d(xi)/dt = D dchi + 2 upsilon .* dupsilon - dphi.
    const Vec dups = sqrt_filter_rate(g, upsilon, chi, dchi, phi, dphi);
    const Vec xi_rate = signed_stack(dchi) + 2.0 * upsilon.cwiseProduct(dups) - dphi;
    const Vec direct = constraint_filter_rate(g, xi, chi);
    CHECK((xi_rate - direct).norm() <= 1e-12);
  }

  // All forcing terms cancel: zero chi and xi with dphi = D dchi.
  Vec phi = vec4(1.0, 4.0, 9.0, 16.0);
  Vec upsilon = initial_sqrt_state(phi);
  CHECK((upsilon - vec4(1.0, 2.0, 3.0, 4.0)).norm() == 0.0);
  const Vec dchi = vec2(0.3, -0.2);
  const Vec quiet = sqrt_filter_rate(g, upsilon, vec2(0.0, 0.0), dchi, phi, signed_stack(dchi));
  CHECK(quiet.norm() == 0.0);

  // Components below the scale floor are singular, not regularized.
  Vec tiny = upsilon;
  tiny[2] = 0.5 * kSqrtScaleFloor;
  CHECK_THROWS_AS(sqrt_filter_rate(g, tiny, vec2(0.0, 0.0), dchi, phi, signed_stack(dchi)),
                  SingularScaleError);

  CHECK_THROWS_AS(initial_sqrt_state(vec4(1.0, -0.1, 2.0, 3.0)), InvalidArgumentError);
}

TEST_CASE("margin rate matches the analytic derivative on fixed branches") {
  const ConstraintBox box = unit_box();
  GainSet g = unit_gains();
  TransitionProfile p;
  p.t0 = 0.0;
  p.T = 2.0;
  p.e0 = vec2(0.3, -0.2);
  p.ed0 = vec2(0.0, 0.1);
  const Reference ref = Reference::setpoint(vec2(0.0, 0.0));

  // Mid-window state strictly inside: velocity branch active on both sides of
  // joint 1, funnel untouched. The analytic rate of phi0 is then
  //   d/dt phi0 = -dde_ref + Kp * deps  (velocity branch, setpoint reference).
  const double t = 0.8;
  const JointState s{vec2(0.2, -0.1), vec2(0.05, 0.02)};
  const Vec ddq = vec2(-0.3, 0.4);

  const VelocityCorridor cor =
      velocity_corridor(box, g, ref.q(t), ref.dq(t), s.q - ref.q(t));
  REQUIRE(cor.hi_slope[0] == 0);
  REQUIRE(cor.hi_slope[1] == 0);
  REQUIRE(cor.lo_slope[0] == 0);
  REQUIRE(cor.lo_slope[1] == 0);

  const ErrorRefs refs = error_refs(p, t);
  const Vec deps = s.dq - refs.de;  // reference velocity is zero
  const Vec dphi_hi = (-refs.dde + g.kp.cwiseProduct(deps)).eval();
  // phi_lo has the same additive structure, so its rate is identical here and
  // the stacked rate is (-dphi_lo, dphi_hi).
  Vec expect(4);
  expect << -dphi_hi, dphi_hi;

  const Vec got = corridor_margin_rate(box, g, p, ref, t, s, ddq, p.t0);
  CHECK((got - expect).norm() <= 1e-5);

  // Funnel branch: near the upper position bound the upper margin's rate is
  // -kappa * edot - dde_ref + Kp * deps.
  const JointState hug{vec2(0.9, 0.0), vec2(0.05, 0.0)};
  const VelocityCorridor cor2 =
      velocity_corridor(box, g, ref.q(t), ref.dq(t), hug.q - ref.q(t));
  REQUIRE(cor2.hi_slope[0] == 1);
  const Vec deps2 = hug.dq - refs.de;
  const double dphi_hi_0 = -g.kappa * hug.dq[0] - refs.dde[0] + g.kp[0] * deps2[0];
  const Vec got2 = corridor_margin_rate(box, g, p, ref, t, hug, ddq, p.t0);
  CHECK(got2[2] == doctest::Approx(dphi_hi_0).epsilon(1e-4));

  // At the window start the probes must not step before t0; the rate is still
  // finite and close to the one-sided analytic value.
  const JointState s0{p.e0, p.ed0};  // zero reference: state equals the error
  const Vec got0 = corridor_margin_rate(box, g, p, ref, p.t0, s0, vec2(0.0, 0.0), p.t0);
  CHECK(got0.allFinite());
}
