#include "ptpb/simulate.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "ptpb/exceptions.hpp"
#include "ptpb/feasibility.hpp"

namespace ptpb {

std::string to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Completed: return "completed";
    case RunStatus::BarrierBreach: return "barrier-breach";
    case RunStatus::ConstraintViolation: return "constraint-violation";
    case RunStatus::SolverError: return "solver-error";
  }
  return "unknown";
}

namespace {

/// Internal control-flow signal: a stage evaluation found the run invalid.
struct AbortRun {
  RunStatus status;
  std::string message;
};

TransitionProfile make_profile(const Scenario& sc) {
  TransitionProfile p;
  p.t0 = sc.t0;
  p.T = sc.T;
  p.e0 = sc.x0.q - sc.ref.q(sc.t0);
  p.ed0 = sc.x0.dq - sc.ref.dq(sc.t0);
  return p;
}

Eigen::Index step_count(const Scenario& sc) {
  const auto steps = static_cast<Eigen::Index>(std::llround(sc.duration / sc.dt));
  return std::max<Eigen::Index>(steps, 1);
}

}  // namespace

void validate_scenario(const Scenario& sc) {
  try {
    if (!sc.model) throw InvalidArgumentError("scenario: no dynamics model");
    const Eigen::Index n = sc.model->dof();
    validate_box(sc.box);
    if (sc.box.dof() != n) throw DimensionError("scenario: box dimension != model dof");
    validate_gains(sc.gains, sc.box);
    if (sc.ref.dof() != n) throw DimensionError("scenario: reference dimension != model dof");
    if (sc.x0.q.size() != n || sc.x0.dq.size() != n)
      throw DimensionError("scenario: initial state dimension != model dof");
    if (!all_finite(sc.x0.q) || !all_finite(sc.x0.dq))
      throw InvalidArgumentError("scenario: non-finite initial state");
    if (!(sc.dt > 0.0)) throw InvalidArgumentError("scenario: dt must be positive");
    if (!(sc.T > 0.0)) throw InvalidArgumentError("scenario: settling horizon must be positive");
    if (!(sc.duration >= sc.T))
      throw InvalidArgumentError("scenario: duration " + std::to_string(sc.duration) +
                                 " s is shorter than the settling horizon " +
                                 std::to_string(sc.T) + " s");
    if (!inside_state_box(sc.box, sc.x0, /*strict=*/true))
      throw InvalidArgumentError("scenario: initial state not strictly inside the state box");
    if (sc.disturbance.enabled) {
      if (sc.disturbance.max.size() != n)
        throw DimensionError("scenario: disturbance magnitude dimension != model dof");
      if (sc.disturbance.max.minCoeff() < 0.0)
        throw InvalidArgumentError("scenario: disturbance magnitudes must be nonnegative");
    }
    if (sc.noise.enabled && !std::isfinite(sc.noise.snr_db))
      throw InvalidArgumentError("scenario: noise SNR must be finite");

    // Initial corridor margins must be nonnegative so the filter can start at zero.
    const TransitionProfile profile = make_profile(sc);
    const CorridorMargins margins =
        corridor_margins(sc.box, sc.gains, profile, sc.ref, sc.t0, sc.x0);
    if (margins.stacked.minCoeff() < 0.0)
      throw InvalidArgumentError(
          "scenario: initial corridor margins negative (min component " +
          std::to_string(margins.stacked.minCoeff()) +
          "); the initial state is too close to the state bounds for margin c = " +
          std::to_string(sc.gains.margin));

    if (sc.bounds.has_value()) {
      validate_bounds(*sc.bounds);
      // Horizon floor: the farthest admissible start must be able to reach the
      // reference ball within T even at the state-rate envelope's speed limit.
      JointState x_ref{sc.ref.q(sc.t0), sc.ref.dq(sc.t0)};
      JointState worst{Vec(n), Vec(n)};
      for (Eigen::Index i = 0; i < n; ++i) {
        worst.q[i] = (sc.box.q_hi[i] - x_ref.q[i] >= x_ref.q[i] - sc.box.q_lo[i])
                         ? sc.box.q_hi[i]
                         : sc.box.q_lo[i];
        worst.dq[i] = (sc.box.dq_hi[i] - x_ref.dq[i] >= x_ref.dq[i] - sc.box.dq_lo[i])
                          ? sc.box.dq_hi[i]
                          : sc.box.dq_lo[i];
      }
      const double floor = t_star(*sc.bounds, sc.box, sc.feas_epsilon, x_ref, worst);
      if (!(sc.T > floor))
        throw InvalidArgumentError("scenario: settling horizon " + std::to_string(sc.T) +
                                   " s does not exceed the feasibility floor " +
                                   std::to_string(floor) + " s");
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& err) {
    throw ValidationError(err.what());
  }
}

Vec uniform_disturbance(const DisturbanceSpec& spec, Rng& stream) {
  if (!spec.enabled) return Vec::Zero(spec.max.size());
  Vec d(spec.max.size());
  for (Eigen::Index i = 0; i < spec.max.size(); ++i)
    d[i] = stream.uniform(-spec.max[i], spec.max[i]);
  return d;
}

NoisePlan make_noise_plan(const Reference& ref, double t0, double dt, Eigen::Index steps,
                          const NoiseSpec& spec) {
  const Eigen::Index n = ref.dof();
  NoisePlan plan{Vec::Zero(n), Vec::Zero(n)};
  if (!spec.enabled) return plan;
  Vec sum_q = Vec::Zero(n);
  Vec sum_dq = Vec::Zero(n);
  for (Eigen::Index k = 0; k <= steps; ++k) {
    const double t = t0 + static_cast<double>(k) * dt;
    sum_q += ref.q(t).cwiseAbs2();
    sum_dq += ref.dq(t).cwiseAbs2();
  }
  const double scale = std::pow(10.0, -spec.snr_db / 20.0);
  const double count = static_cast<double>(steps + 1);
  plan.sigma_q = (sum_q / count).cwiseSqrt() * scale;
  plan.sigma_dq = (sum_dq / count).cwiseSqrt() * scale;
  return plan;
}

namespace {

/// Everything one RK4 stage needs and produces.
struct StageRecord {
  ErrorPair err_true;
  ShiftedErrors shifted;
  Vec chi;
  Vec xi;
  ControlOutput ctl;
  Vec d;
};

class Runner {
 public:
  explicit Runner(const Scenario& sc)
      : sc_(sc),
        n_(sc.model->dof()),
        profile_(make_profile(sc)),
        steps_(step_count(sc)),
        dist_stream_(derive_seed(sc.seed, 1)),
        noise_stream_(derive_seed(sc.seed, 2)),
        noise_plan_(make_noise_plan(sc.ref, sc.t0, sc.dt, steps_, sc.noise)) {}

  SimResult run() {
    SimResult res;
    reserve(res, steps_ + 1);

    Vec z(2 * n_ + 2 * n_);
    z.head(n_) = sc_.x0.q;
    z.segment(n_, n_) = sc_.x0.dq;
    z.tail(2 * n_).setZero();

    bool sqrt_state_pending = (sc_.filter == FilterMode::Sqrt);
    double step_start = sc_.t0;
    try {
      for (Eigen::Index k = 0; k < steps_; ++k) {
        const double t = sc_.t0 + static_cast<double>(k) * sc_.dt;
        step_start = t;
        draw_step_randomness();
        if (sqrt_state_pending) {
          init_sqrt_state(z, t);
          sqrt_state_pending = false;
        }
        StageRecord rec;
        held_u_.reset();
        const Vec k1 = eval(t, z, &rec);
        push_row(res, t, z, rec);
        const Vec k2 = eval(t + 0.5 * sc_.dt, z + (0.5 * sc_.dt) * k1, nullptr);
        const Vec k3 = eval(t + 0.5 * sc_.dt, z + (0.5 * sc_.dt) * k2, nullptr);
        const Vec k4 = eval(t + sc_.dt, z + sc_.dt * k3, nullptr);
        z += (sc_.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      const double t_end = sc_.t0 + static_cast<double>(steps_) * sc_.dt;
      step_start = t_end;
      draw_step_randomness();
      if (sqrt_state_pending) init_sqrt_state(z, t_end);
      StageRecord rec;
      held_u_.reset();
      eval(t_end, z, &rec);
      push_row(res, t_end, z, rec);
      res.status = RunStatus::Completed;
      res.fail_time = t_end;
    } catch (const AbortRun& abort) {
      res.status = abort.status;
      res.message = abort.message;
      res.fail_time = step_start;
      shrink(res);
    }
    return res;
  }

 private:
  void draw_step_randomness() {
    if (sc_.disturbance.enabled) d_held_ = uniform_disturbance(sc_.disturbance, dist_stream_);
    else d_held_ = Vec::Zero(n_);
    if (sc_.noise.enabled) {
      noise_q_.resize(n_);
      noise_dq_.resize(n_);
      for (Eigen::Index i = 0; i < n_; ++i)
        noise_q_[i] = noise_stream_.gaussian(0.0, noise_plan_.sigma_q[i]);
      for (Eigen::Index i = 0; i < n_; ++i)
        noise_dq_[i] = noise_stream_.gaussian(0.0, noise_plan_.sigma_dq[i]);
    } else {
      noise_q_ = Vec::Zero(n_);
      noise_dq_ = Vec::Zero(n_);
    }
  }

  /// The Sqrt filter starts at the componentwise square root of the initial
  /// margins, computed from the same measured state the first stage will see.
  void init_sqrt_state(Vec& z, double t) {
    const JointState measured{z.head(n_) + noise_q_, z.segment(n_, n_) + noise_dq_};
    try {
      const CorridorMargins margins =
          corridor_margins(sc_.box, sc_.gains, profile_, sc_.ref, t, measured);
      z.tail(2 * n_) = initial_sqrt_state(margins.stacked);
    } catch (const Error& err) {
      throw AbortRun{RunStatus::SolverError, err.what()};
    }
  }

  Vec eval(double t, const Vec& z, StageRecord* rec) {
    if (!z.allFinite()) throw AbortRun{RunStatus::SolverError, "non-finite state"};
    const JointState true_state{z.head(n_), z.segment(n_, n_)};
    const Vec w = z.tail(2 * n_);

    if (!inside_state_box(sc_.box, true_state, /*strict=*/false))
      throw AbortRun{RunStatus::ConstraintViolation,
                     "state left the position/velocity box at t = " + std::to_string(t)};

    const JointState measured{true_state.q + noise_q_, true_state.dq + noise_dq_};
    const ErrorPair err = tracking_error(sc_.ref, t, measured);
    const ErrorRefs refs = error_refs(profile_, t);
    const ShiftedErrors shifted{err.e - refs.e, err.de - refs.de};
    const Vec chi = filtered_error(sc_.gains, shifted.eps, shifted.deps);

    if (chi.norm() >= sc_.gains.varpi)
      throw AbortRun{RunStatus::BarrierBreach,
                     "filtered error reached the barrier radius at t = " + std::to_string(t)};

    Vec xi;
    CorridorMargins margins;
    if (sc_.filter == FilterMode::Sqrt) {
      try {
        margins = corridor_margins(sc_.box, sc_.gains, profile_, sc_.ref, t, measured);
      } catch (const Error& err_margin) {
        throw AbortRun{RunStatus::SolverError, err_margin.what()};
      }
      xi = recover_filter_state(w, chi, margins.stacked);
    } else {
      xi = w;
    }

    ControlOutput ctl;
    if (sc_.update == ControlUpdate::PerStep && held_u_.has_value()) {
      ctl = *held_u_;
    } else {
      try {
        ctl = control_step(sc_.gains, sc_.box, shifted.eps, shifted.deps, chi, xi);
      } catch (const BarrierBreachError& breach) {
        throw AbortRun{RunStatus::BarrierBreach, breach.what()};
      }
      if (sc_.update == ControlUpdate::PerStep) held_u_ = ctl;
    }

    Vec ddq;
    try {
      ddq = forward_dynamics(*sc_.model, true_state, ctl.u, d_held_);
    } catch (const Error& dyn_err) {
      throw AbortRun{RunStatus::SolverError, dyn_err.what()};
    }

    Vec w_rate;
    if (sc_.filter == FilterMode::Sqrt) {
      // The measured rate equals the true rate: the per-step noise offset is
      // constant within the step, so it differentiates to zero.
      const Vec dchi = (ddq - sc_.ref.ddq(t) - refs.dde) + sc_.gains.kp.cwiseProduct(shifted.deps);
      try {
        const Vec dphi = corridor_margin_rate(sc_.box, sc_.gains, profile_, sc_.ref, t, measured,
                                              ddq, sc_.t0);
        w_rate = sqrt_filter_rate(sc_.gains, w, chi, dchi, margins.stacked, dphi);
      } catch (const Error& sqrt_err) {
        throw AbortRun{RunStatus::SolverError, sqrt_err.what()};
      }
    } else {
      w_rate = constraint_filter_rate(sc_.gains, w, chi);
    }

    if (rec) {
      rec->err_true = tracking_error(sc_.ref, t, true_state);
      rec->shifted = shifted;
      rec->chi = chi;
      rec->xi = xi;
      rec->ctl = ctl;
      rec->d = d_held_;
    }

    Vec dz(4 * n_);
    dz.head(n_) = true_state.dq;
    dz.segment(n_, n_) = ddq;
    dz.tail(2 * n_) = w_rate;
    return dz;
  }

  void reserve(SimResult& res, Eigen::Index rows) {
    res.t.reserve(static_cast<std::size_t>(rows));
    res.q.resize(rows, n_);
    res.dq.resize(rows, n_);
    res.e.resize(rows, n_);
    res.de.resize(rows, n_);
    res.eps.resize(rows, n_);
    res.deps.resize(rows, n_);
    res.chi.resize(rows, n_);
    res.xi.resize(rows, 2 * n_);
    res.k_gain.resize(rows);
    res.scale.resize(rows);
    res.tau.resize(rows, n_);
    res.u.resize(rows, n_);
    res.d.resize(rows, n_);
  }

  void push_row(SimResult& res, double t, const Vec& z, const StageRecord& rec) {
    const auto r = static_cast<Eigen::Index>(res.t.size());
    res.t.push_back(t);
    res.q.row(r) = z.head(n_).transpose();
    res.dq.row(r) = z.segment(n_, n_).transpose();
    res.e.row(r) = rec.err_true.e.transpose();
    res.de.row(r) = rec.err_true.de.transpose();
    res.eps.row(r) = rec.shifted.eps.transpose();
    res.deps.row(r) = rec.shifted.deps.transpose();
    res.chi.row(r) = rec.chi.transpose();
    res.xi.row(r) = rec.xi.transpose();
    res.k_gain[r] = rec.ctl.k_gain;
    res.scale[r] = rec.ctl.scale;
    res.tau.row(r) = rec.ctl.tau.transpose();
    res.u.row(r) = rec.ctl.u.transpose();
    res.d.row(r) = rec.d.transpose();
  }

  void shrink(SimResult& res) {
    const auto rows = static_cast<Eigen::Index>(res.t.size());
    res.q.conservativeResize(rows, Eigen::NoChange);
    res.dq.conservativeResize(rows, Eigen::NoChange);
    res.e.conservativeResize(rows, Eigen::NoChange);
    res.de.conservativeResize(rows, Eigen::NoChange);
    res.eps.conservativeResize(rows, Eigen::NoChange);
    res.deps.conservativeResize(rows, Eigen::NoChange);
    res.chi.conservativeResize(rows, Eigen::NoChange);
    res.xi.conservativeResize(rows, Eigen::NoChange);
    res.k_gain.conservativeResize(rows);
    res.scale.conservativeResize(rows);
    res.tau.conservativeResize(rows, Eigen::NoChange);
    res.u.conservativeResize(rows, Eigen::NoChange);
    res.d.conservativeResize(rows, Eigen::NoChange);
  }

  const Scenario& sc_;
  Eigen::Index n_;
  TransitionProfile profile_;
  Eigen::Index steps_;
  Rng dist_stream_;
  Rng noise_stream_;
  NoisePlan noise_plan_;
  Vec d_held_;
  Vec noise_q_;
  Vec noise_dq_;
  std::optional<ControlOutput> held_u_;
};

}  // namespace

SimResult run_scenario(const Scenario& sc) {
  validate_scenario(sc);
  Runner runner(sc);
  return runner.run();
}

Metrics compute_metrics(const SimResult& result, double t0, double T) {
  if (result.status != RunStatus::Completed)
    throw InvalidArgumentError("compute_metrics: run did not complete (status " +
                               to_string(result.status) + ")");
  const double window_start = t0 + T - 1e-12;
  Eigen::Index first = -1;
  for (Eigen::Index k = 0; k < result.rows(); ++k) {
    if (result.t[static_cast<std::size_t>(k)] >= window_start) {
      first = k;
      break;
    }
  }
  if (first < 0)
    throw InsufficientWindowError("compute_metrics: no samples at or after t0 + T = " +
                                  std::to_string(t0 + T));

  const Eigen::Index n = result.dof();
  const Eigen::Index count = result.rows() - first;
  Metrics m;
  m.window_start = result.t[static_cast<std::size_t>(first)];
  m.window_samples = count;
  m.joints.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto e = result.e.col(j).segment(first, count);
    const auto de = result.de.col(j).segment(first, count);
    JointMetrics& jm = m.joints[static_cast<std::size_t>(j)];
    jm.mase_deg = rad2deg(e.cwiseAbs().maxCoeff());
    jm.mae_deg = rad2deg(e.cwiseAbs().mean());
    jm.rmse_deg = rad2deg(std::sqrt(e.cwiseAbs2().mean()));
    jm.mase_deg_s = rad2deg(de.cwiseAbs().maxCoeff());
    jm.mae_deg_s = rad2deg(de.cwiseAbs().mean());
    jm.rmse_deg_s = rad2deg(std::sqrt(de.cwiseAbs2().mean()));
  }
  double sup_e = 0.0;
  double sup_de = 0.0;
  for (Eigen::Index k = first; k < result.rows(); ++k) {
    sup_e = std::max(sup_e, result.e.row(k).norm());
    sup_de = std::max(sup_de, result.de.row(k).norm());
  }
  m.sup_e_norm_deg = rad2deg(sup_e);
  m.sup_de_norm_deg_s = rad2deg(sup_de);
  return m;
}

}  // namespace ptpb
