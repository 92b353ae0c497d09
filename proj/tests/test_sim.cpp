#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>

#include "ptpb/exceptions.hpp"
#include "ptpb/simulate.hpp"

using namespace ptpb;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

ConstraintBox make_box(double q, double dq, double u) {
  ConstraintBox box;
  box.q_lo = v2(-q, -q);
  box.q_hi = v2(q, q);
  box.dq_lo = v2(-dq, -dq);
  box.dq_hi = v2(dq, dq);
  box.u_lo = v2(-u, -u);
  box.u_hi = v2(u, u);
  return box;
}

/// Arm held at the origin set-point with stiff gains: the plant starts exactly
/// on target and the controller has to fight gravity from a standing start.
Scenario hold_scenario() {
  Scenario sc;
  sc.model = std::make_shared<PlanarArm>();
  sc.box = make_box(1.0, 3.0, 500.0);
  sc.gains.kp = v2(2400.0, 1000.0);
  sc.gains.rho = 4000.0;
  sc.gains.varpi = 0.6;
  sc.gains.gamma = 50.0;
  sc.gains.alpha = 0.5;
  sc.gains.kappa = 3.5;
  sc.gains.margin = 0.5;
  sc.ref = Reference::setpoint(v2(0.0, 0.0));
  sc.x0 = JointState{v2(0.0, 0.0), v2(0.0, 0.0)};
  sc.t0 = 0.0;
  sc.T = 0.2;
  sc.duration = 0.25;
  sc.dt = 5e-6;
  sc.seed = 7;
  return sc;
}

/// Arm tracking a circular joint-space reference that stays well inside the box.
Scenario tracking_scenario() {
  Scenario sc;
  sc.model = std::make_shared<PlanarArm>();
  sc.box = make_box(0.6, 1.5, 300.0);
  sc.gains.kp = v2(2400.0, 1000.0);
  sc.gains.rho = 40.0;
  sc.gains.varpi = 0.6;
  sc.gains.gamma = 20.0;
  sc.gains.alpha = 0.5;
  sc.gains.kappa = 3.5;
  sc.gains.margin = 0.5;
  sc.ref = Reference::sinusoid(v2(0.3, 0.3), v2(1.0, 1.0), v2(0.0, 0.5 * kPi));
  sc.x0 = JointState{sc.ref.q(0.0), sc.ref.dq(0.0)};
  sc.t0 = 0.0;
  sc.T = 1.0;
  sc.duration = 1.5;
  sc.dt = 2e-4;
  sc.seed = 11;
  return sc;
}

/// Dynamics whose inertia matrix stops being positive definite once the first
/// joint strays past 0.3 rad; constant gravity drags it there.
class SwitchingMassModel final : public DynamicsProvider {
 public:
  int dof() const override { return 2; }
  Mat mass(const Vec& q) const override {
    Mat m(2, 2);
    if (std::abs(q[0]) < 0.3) {
      m << 1.0, 0.0, 0.0, 1.0;
    } else {
      m << 1.0, 2.0, 2.0, 1.0;  // eigenvalues -1 and 3
    }
    return m;
  }
  Mat coriolis(const Vec&, const Vec&) const override { return Mat::Zero(2, 2); }
  Vec gravity(const Vec&) const override { return v2(5.0, 0.0); }
  Vec friction(const Vec&) const override { return Vec::Zero(2); }
};

}  // namespace

TEST_CASE("holding a setpoint against gravity keeps the error sub-microradian") {
  const Scenario sc = hold_scenario();
  const SimResult r = run_scenario(sc);

  REQUIRE(r.status == RunStatus::Completed);
  CHECK(r.rows() == 50001);
  CHECK(r.t.front() == 0.0);
  CHECK(r.t.back() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.fail_time == r.t.back());

  // The plant starts on target, sags under gravity, and is caught by the
  // barrier gain before the error reaches a microradian.
  double sup_e = 0.0;
  double sup_chi = 0.0;
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    sup_e = std::max(sup_e, r.e.row(k).norm());
    sup_chi = std::max(sup_chi, r.chi.row(k).norm());
  }
  CHECK(r.e.row(0).norm() == 0.0);
  CHECK(sup_e > 0.0);
  CHECK(sup_e < 1e-6);
  CHECK(sup_chi < 0.01);

  // Holding torque converges to the gravity load at the target posture
  // (u enters the plant on the same side the resistive terms leave it).
  const Vec g = sc.model->gravity(v2(0.0, 0.0));
  CHECK((r.u.row(r.rows() - 1).transpose() - g).norm() < 0.05 * g.norm());
  Vec mean_u = Vec::Zero(2);
  const Eigen::Index half = r.rows() / 2;
  for (Eigen::Index k = half; k < r.rows(); ++k) mean_u += r.u.row(k).transpose();
  mean_u /= static_cast<double>(r.rows() - half);
  CHECK((mean_u - g).norm() < 1e-2);
}

TEST_CASE("disturbance draws respect the amplitude box and average out") {
  DisturbanceSpec spec;
  spec.enabled = true;
  spec.max = v2(0.2, 0.05);
  Rng stream(99);

  const int draws = 100000;
  Vec peak = Vec::Zero(2);
  Vec mean = Vec::Zero(2);
  for (int k = 0; k < draws; ++k) {
    const Vec d = uniform_disturbance(spec, stream);
    REQUIRE(d.size() == 2);
    CHECK(std::abs(d[0]) <= 0.2);
    CHECK(std::abs(d[1]) <= 0.05);
    peak = peak.cwiseMax(d.cwiseAbs());
    mean += d / draws;
  }
  CHECK(peak[0] >= 0.999 * 0.2);   // the range is actually filled
  CHECK(peak[1] >= 0.999 * 0.05);
  CHECK(std::abs(mean[0]) < 2e-3); // zero-mean to sampling accuracy
  CHECK(std::abs(mean[1]) < 5e-4);

  DisturbanceSpec off;
  off.max = v2(0.2, 0.05);
  CHECK(uniform_disturbance(off, stream).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identical scenarios reproduce bit for bit; seeds matter") {
  Scenario sc = tracking_scenario();
  sc.duration = 1.0;
  sc.T = 0.5;
  sc.disturbance.enabled = true;
  sc.disturbance.max = v2(0.05, 0.05);
  sc.noise.enabled = true;
  // Stiff proportional gains amplify position noise into the filtered error,
  // so keep the noise well under the barrier: chi jitter ~ kp_max * sigma_q.
  sc.noise.snr_db = 80.0;

  const SimResult a = run_scenario(sc);
  const SimResult b = run_scenario(sc);
  REQUIRE(a.status == RunStatus::Completed);
  REQUIRE(b.status == RunStatus::Completed);
  REQUIRE(a.rows() == b.rows());
  CHECK((a.q - b.q).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.d - b.d).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.chi - b.chi).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.xi - b.xi).cwiseAbs().maxCoeff() == 0.0);

  // The controller's view is the measured state: noise separates eps from e.
  CHECK((a.eps - a.e).cwiseAbs().maxCoeff() > 0.0);

  Scenario other = sc;
  other.seed = sc.seed + 1;
  const SimResult c = run_scenario(other);
  REQUIRE(c.status == RunStatus::Completed);
  CHECK((a.d - c.d).cwiseAbs().maxCoeff() > 0.0);
  CHECK((a.q - c.q).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("metrics summarize the post-settling window") {
  // Hand-built runs with closed-form statistics.
  const auto make_result = [](int samples, double dt) {
    SimResult res;
    res.q.resize(samples, 1);
    res.q.setZero();
    res.e.resize(samples, 1);
    res.de.resize(samples, 1);
    for (int k = 0; k < samples; ++k) res.t.push_back(k * dt);
    return res;
  };

  SUBCASE("all-zero run") {
    SimResult res = make_result(11, 0.1);
    res.e.setZero();
    res.de.setZero();
    const Metrics m = compute_metrics(res, 0.0, 0.5);
    CHECK(m.window_start == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(m.window_samples == 6);
    CHECK(m.joints.at(0).mase_deg == 0.0);
    CHECK(m.joints.at(0).rmse_deg == 0.0);
    CHECK(m.sup_e_norm_deg == 0.0);
  }

  SUBCASE("constant error") {
    SimResult res = make_result(11, 0.1);
    res.e.setConstant(deg2rad(0.1));
    res.de.setConstant(-deg2rad(0.2));
    const Metrics m = compute_metrics(res, 0.0, 0.5);
    const JointMetrics& j = m.joints.at(0);
    CHECK(j.mase_deg == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(j.mae_deg == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(j.rmse_deg == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(j.mase_deg_s == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(j.mae_deg_s == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(j.rmse_deg_s == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(m.sup_e_norm_deg == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("linear ramp") {
    // e_k = a * k/10, k = 0..10: max = a, mean = a/2, rms = a sqrt(385/1100).
    SimResult res = make_result(11, 0.1);
    const double a = deg2rad(2.0);
    for (int k = 0; k <= 10; ++k) {
      res.e(k, 0) = a * k / 10.0;
      res.de(k, 0) = 0.0;
    }
    const Metrics m = compute_metrics(res, 0.0, 0.0);
    CHECK(m.window_samples == 11);
    const JointMetrics& j = m.joints.at(0);
    CHECK(j.mase_deg == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(j.mae_deg == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(j.rmse_deg == doctest::Approx(2.0 * std::sqrt(385.0 / 1100.0)).epsilon(1e-12));
  }

  SUBCASE("norm suprema stack joints") {
    SimResult res;
    res.q.resize(3, 2);
    res.q.setZero();
    res.e.resize(3, 2);
    res.de.resize(3, 2);
    for (int k = 0; k < 3; ++k) {
      res.t.push_back(k * 1.0);
      res.e.row(k) = v2(deg2rad(3.0), deg2rad(4.0)).transpose();
      res.de.row(k) = v2(deg2rad(0.3), deg2rad(0.4)).transpose();
    }
    const Metrics m = compute_metrics(res, 0.0, 1.0);
    CHECK(m.joints.size() == 2);
    CHECK(m.sup_e_norm_deg == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(m.sup_de_norm_deg_s == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("a sample exactly at the window edge counts") {
    SimResult res = make_result(2, 1.0);
    res.e.setZero();
    res.de.setZero();
    const Metrics m = compute_metrics(res, 0.0, 1.0);
    CHECK(m.window_samples == 1);
    CHECK(m.window_start == 1.0);
  }

  SUBCASE("empty window and failed runs are errors") {
    SimResult res = make_result(11, 0.1);
    res.e.setZero();
    res.de.setZero();
    CHECK_THROWS_AS(compute_metrics(res, 0.0, 2.0), InsufficientWindowError);
    res.status = RunStatus::BarrierBreach;
    CHECK_THROWS_AS(compute_metrics(res, 0.0, 0.5), InvalidArgumentError);
  }
}

TEST_CASE("starved input authority ends in a barrier breach") {
  Scenario sc;
  sc.model = std::make_shared<PlanarArm>();
  sc.box = make_box(1.0, 3.0, 5.0);  // gravity needs ~20 N m; 5 cannot hold it
  sc.gains.kp = v2(60.0, 18.0);
  sc.gains.rho = 1.0;
  sc.gains.varpi = 0.5;
  sc.gains.gamma = 10.0;
  sc.gains.alpha = 0.5;
  sc.gains.kappa = 3.5;
  sc.gains.margin = 0.3;
  sc.ref = Reference::setpoint(v2(0.0, 0.0));
  sc.x0 = JointState{v2(0.0, 0.0), v2(0.0, 0.0)};
  sc.T = 0.3;
  sc.duration = 0.5;
  sc.dt = 1e-3;

  const SimResult r = run_scenario(sc);
  CHECK(r.status == RunStatus::BarrierBreach);
  CHECK(r.message.find("barrier radius") != std::string::npos);
  CHECK(r.rows() >= 1);
  CHECK(r.fail_time > 0.0);
  CHECK(r.fail_time < 0.2);

  // Failure is stamped at the start of the offending step; recorded samples
  // all predate it and still satisfy the barrier strictly.
  CHECK(r.fail_time >= (r.rows() - 1) * sc.dt - 1e-12);
  CHECK(r.fail_time <= r.rows() * sc.dt + 1e-12);
  for (Eigen::Index k = 0; k < r.rows(); ++k) CHECK(r.chi.row(k).norm() < sc.gains.varpi);

  // The commanded input saturates at the box before the breach.
  double sup_u = 0.0;
  for (Eigen::Index k = 0; k < r.rows(); ++k)
    sup_u = std::max(sup_u, r.u.row(k).cwiseAbs().maxCoeff());
  CHECK(sup_u == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("a reference leading outside the position box ends in a violation") {
  Scenario sc = tracking_scenario();
  // Shrink the first joint's travel below the reference amplitude: tracking
  // succeeds right up to the wall and then trips the box monitor.
  sc.box.q_lo[0] = -0.25;
  sc.box.q_hi[0] = 0.25;
  sc.gains.kappa = 7.0;  // the smaller box raises the funnel-slope floor
  sc.duration = 1.5;

  const SimResult r = run_scenario(sc);
  CHECK(r.status == RunStatus::ConstraintViolation);
  CHECK(r.message.find("left the position/velocity box") != std::string::npos);

  // The reference 0.3 sin t crosses 0.25 at t = asin(5/6).
  CHECK(r.fail_time == doctest::Approx(std::asin(5.0 / 6.0)).epsilon(0.05));

  // Every recorded sample passed the (closed) box check.
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    CHECK(r.q(k, 0) <= 0.25);
    CHECK(r.q(k, 0) >= -0.25);
  }
}

TEST_CASE("a degenerate mass matrix ends in a solver error") {
  Scenario sc;
  sc.model = std::make_shared<SwitchingMassModel>();
  sc.box = make_box(1.0, 5.0, 10.0);
  sc.gains.kp = v2(1.0, 1.0);
  sc.gains.rho = 1e-6;  // effectively open loop: gravity wins
  sc.gains.varpi = 1000.0;
  sc.gains.gamma = 1.0;
  sc.gains.alpha = 0.5;
  sc.gains.kappa = 6.0;
  sc.gains.margin = 0.0;
  sc.ref = Reference::setpoint(v2(0.0, 0.0));
  sc.x0 = JointState{v2(0.0, 0.0), v2(0.0, 0.0)};
  sc.T = 0.5;
  sc.duration = 1.0;
  sc.dt = 1e-3;

  const SimResult r = run_scenario(sc);
  CHECK(r.status == RunStatus::SolverError);
  CHECK(r.message.find("not positive definite") != std::string::npos);
  // Constant gravity 5 on a unit mass reaches |q| = 0.3 at sqrt(0.3/2.5).
  CHECK(r.fail_time == doctest::Approx(std::sqrt(0.3 / 2.5)).epsilon(0.05));
}

TEST_CASE("closed-loop invariants: filter ball and corridor margins") {
  const Scenario sc = tracking_scenario();
  const SimResult r = run_scenario(sc);
  REQUIRE(r.status == RunStatus::Completed);

  // The constraint filter is a leaky average of alpha * (-chi, chi), so its
  // norm can never leave the ball of radius alpha * sqrt(2) * varpi.
  const double ball = sc.gains.alpha * kSignedStackNorm * sc.gains.varpi;
  for (Eigen::Index k = 0; k < r.rows(); ++k)
    CHECK(r.xi.row(k).norm() <= ball * (1.0 + 1e-9));

  // Noise-free run: recompute the corridor margins from the recorded true
  // state; the controller must have kept them nonnegative throughout.
  TransitionProfile profile;
  profile.t0 = sc.t0;
  profile.T = sc.T;
  profile.e0 = sc.x0.q - sc.ref.q(sc.t0);
  profile.ed0 = sc.x0.dq - sc.ref.dq(sc.t0);
  double min_margin = 1e300;
  for (Eigen::Index k = 0; k < r.rows(); ++k) {
    const JointState state{r.q.row(k).transpose(), r.dq.row(k).transpose()};
    const CorridorMargins margins =
        corridor_margins(sc.box, sc.gains, profile, sc.ref, r.t[static_cast<std::size_t>(k)],
                         state);
    min_margin = std::min(min_margin, margins.stacked.minCoeff());
  }
  CHECK(min_margin >= -1e-9);
}

TEST_CASE("zero-order-hold control completes and differs from per-stage updates") {
  Scenario sc = tracking_scenario();
  sc.duration = 1.0;
  sc.T = 0.5;

  Scenario held = sc;
  held.update = ControlUpdate::PerStep;

  const SimResult a = run_scenario(sc);
  const SimResult b = run_scenario(held);
  REQUIRE(a.status == RunStatus::Completed);
  REQUIRE(b.status == RunStatus::Completed);
  REQUIRE(a.rows() == b.rows());
  // Holding u across the step changes the stage derivatives, hence the path.
  CHECK((a.q - b.q).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a run of one step yields exactly two samples") {
  Scenario sc = hold_scenario();
  sc.T = sc.dt;        // keep the step the stiff gains were tuned for
  sc.duration = sc.dt;
  const SimResult r = run_scenario(sc);
  REQUIRE(r.status == RunStatus::Completed);
  CHECK(r.rows() == 2);
  CHECK(r.t.front() == 0.0);
  CHECK(r.t.back() == doctest::Approx(sc.dt).epsilon(1e-12));
}

TEST_CASE("noise plans scale the reference RMS by the requested ratio") {
  NoiseSpec spec;
  spec.enabled = true;
  spec.snr_db = 30.0;

  // Constant reference: unit RMS on the position channel, zero on velocity.
  const Reference set = Reference::setpoint(v2(1.0, 0.0));
  const NoisePlan plan = make_noise_plan(set, 0.0, 1e-3, 1000, spec);
  CHECK(plan.sigma_q[0] == doctest::Approx(0.031622776601683791).epsilon(1e-15));
  CHECK(plan.sigma_q[1] == 0.0);
  CHECK(plan.sigma_dq.cwiseAbs().maxCoeff() == 0.0);

  // Sinusoid over (nearly) full periods: RMS approaches A / sqrt(2).
  NoiseSpec snr20;
  snr20.enabled = true;
  snr20.snr_db = 20.0;
  const Reference sin_ref = Reference::sinusoid(v2(0.4, 0.4), v2(1.0, 1.0), v2(0.0, 0.0));
  const Eigen::Index steps = static_cast<Eigen::Index>(std::llround(2.0 * kPi / 1e-3));
  const NoisePlan sin_plan = make_noise_plan(sin_ref, 0.0, 1e-3, steps, snr20);
  CHECK(sin_plan.sigma_q[0] == doctest::Approx(0.1 * 0.4 / std::sqrt(2.0)).epsilon(1e-3));
  CHECK(sin_plan.sigma_dq[0] == doctest::Approx(0.1 * 0.4 / std::sqrt(2.0)).epsilon(1e-3));

  NoiseSpec off;
  CHECK(make_noise_plan(set, 0.0, 1e-3, 1000, off).sigma_q.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("scenario validation rejects malformed setups") {
  const Scenario good = hold_scenario();
  CHECK_NOTHROW(validate_scenario(good));

  SUBCASE("missing model") {
    Scenario sc = good;
    sc.model.reset();
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }

  SUBCASE("box dimension mismatch") {
    Scenario sc = good;
    sc.box.q_lo = Vec::Constant(3, -1.0);
    sc.box.q_hi = Vec::Constant(3, 1.0);
    sc.box.dq_lo = Vec::Constant(3, -3.0);
    sc.box.dq_hi = Vec::Constant(3, 3.0);
    sc.box.u_lo = Vec::Constant(3, -500.0);
    sc.box.u_hi = Vec::Constant(3, 500.0);
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }

  SUBCASE("non-positive step and horizon") {
    Scenario sc = good;
    sc.dt = 0.0;
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
    sc = good;
    sc.T = 0.0;
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }

  SUBCASE("duration shorter than the settling horizon") {
    Scenario sc = good;
    sc.duration = 0.5 * sc.T;
    try {
      validate_scenario(sc);
      FAIL("short duration must be rejected");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).find("shorter than the settling horizon") !=
            std::string::npos);
    }
  }

  SUBCASE("initial state on the box boundary") {
    Scenario sc = good;
    sc.x0.q[0] = sc.box.q_hi[0];
    try {
      validate_scenario(sc);
      FAIL("boundary start must be rejected");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).find("strictly inside") != std::string::npos);
    }
  }

  SUBCASE("initial state too close to the wall for the corridor margin") {
    Scenario sc = good;
    sc.x0.q[0] = 0.97;  // funnel allowance 3.5 * 0.03 << margin c = 0.5
    try {
      validate_scenario(sc);
      FAIL("negative initial margins must be rejected");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).find("initial corridor margins negative") !=
            std::string::npos);
    }
  }

  SUBCASE("settling horizon below the feasibility floor") {
    Scenario sc = good;
    ModelBounds b;
    b.mass_eig_lower = 1.0;
    b.mass_eig_upper = 3.0;
    b.minv_eig_lower = 1.0 / 3.0;
    b.minv_eig_upper = 1.0;
    b.coriolis_gain = 1.2;
    b.gravity_max = 20.0;
    b.friction_gain = 0.2;
    sc.bounds = b;
    CHECK_NOTHROW(validate_scenario(sc));  // T = 0.2 clears the floor
    sc.T = 0.004;
    sc.duration = 0.25;
    try {
      validate_scenario(sc);
      FAIL("sub-floor horizon must be rejected");
    } catch (const ValidationError& err) {
      CHECK(std::string(err.what()).find("feasibility floor") != std::string::npos);
    }
  }

  SUBCASE("disturbance magnitudes must be nonnegative") {
    Scenario sc = good;
    sc.disturbance.enabled = true;
    sc.disturbance.max = v2(0.1, -0.1);
    CHECK_THROWS_AS(validate_scenario(sc), ValidationError);
  }
}
