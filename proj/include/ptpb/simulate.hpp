#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ptpb/constraints.hpp"
#include "ptpb/controller.hpp"
#include "ptpb/model.hpp"
#include "ptpb/pipeline.hpp"
#include "ptpb/rng.hpp"
#include "ptpb/transition.hpp"
#include "ptpb/types.hpp"

namespace ptpb {

/// Which realization of the constraint filter the integrator advances.
/// Direct integrates the filter state itself; Sqrt advances the componentwise
/// square root of the margin slack and recovers the filter state algebraically
/// (kept as a fidelity cross-check; Direct is the production path).
enum class FilterMode { Direct, Sqrt };

/// Whether the control input is recomputed at every integrator stage
/// (continuous-control idealization) or held over the step (zero-order hold).
enum class ControlUpdate { PerStage, PerStep };

struct DisturbanceSpec {
  bool enabled = false;
  Vec max;  ///< per-joint maximum magnitudes [N m], >= 0
};

struct NoiseSpec {
  bool enabled = false;
  double snr_db = 0.0;  ///< per-channel SNR relative to the reference RMS
};

/// A complete closed-loop experiment description.
struct Scenario {
  std::shared_ptr<const DynamicsProvider> model;
  ConstraintBox box;
  GainSet gains;
  Reference ref = Reference::setpoint(Vec::Zero(1));
  JointState x0;
  double t0 = 0.0;
  double T = 1.0;        ///< settling horizon [s]
  double duration = 1.0; ///< simulated span from t0 [s], >= T
  double dt = 1e-3;      ///< integrator step [s]
  DisturbanceSpec disturbance;
  NoiseSpec noise;
  std::uint64_t seed = 1;
  FilterMode filter = FilterMode::Direct;
  ControlUpdate update = ControlUpdate::PerStage;
  std::optional<ModelBounds> bounds; ///< enables the horizon-floor feasibility gate
  double feas_epsilon = 0.01;        ///< target-ball radius for the horizon floor [rad]
};

/// Throws ValidationError when the scenario is malformed or infeasible:
/// mismatched dimensions, non-positive dt, duration < T, initial state not
/// strictly inside the box, negative initial corridor margins, funnel slope
/// kappa at or below its floor, or (with bounds present) T at or below the
/// horizon floor.
void validate_scenario(const Scenario& sc);

enum class RunStatus { Completed, BarrierBreach, ConstraintViolation, SolverError };
std::string to_string(RunStatus status);

/// Time series of one run. Rows are samples; matrix columns are joints
/// (the filter state has 2n columns). `e`/`de` are true tracking errors;
/// `eps`/`deps`/`chi` are the controller's view (measured under noise).
struct SimResult {
  std::vector<double> t;
  Mat q, dq;         ///< true plant state
  Mat e, de;         ///< true tracking error and rate
  Mat eps, deps;     ///< shifted errors seen by the controller
  Mat chi;           ///< filtered error seen by the controller
  Mat xi;            ///< constraint-filter state (recovered in Sqrt mode)
  Vec k_gain;        ///< barrier gain K per sample
  Vec scale;         ///< adaptive scale Gamma per sample
  Mat tau, u, d;     ///< raw command, applied input, disturbance
  RunStatus status = RunStatus::Completed;
  double fail_time = 0.0;  ///< step-start time stamped on failure (end time otherwise)
  std::string message;     ///< diagnostic for non-completed statuses

  Eigen::Index rows() const { return static_cast<Eigen::Index>(t.size()); }
  Eigen::Index dof() const { return q.cols(); }
};

/// Integrates plant + constraint filter with classical fixed-step RK4.
/// Disturbance and measurement noise are redrawn once per step and held across
/// the four stages. Identical scenarios (including seed) give bit-identical
/// results.
SimResult run_scenario(const Scenario& sc);

/// Per-step disturbance draw: component i uniform on [-max_i, max_i].
Vec uniform_disturbance(const DisturbanceSpec& spec, Rng& stream);

/// Per-channel noise standard deviations: RMS of the reference signal over the
/// run grid, scaled by 10^(-SNR/20). Channels with zero reference RMS get zero
/// noise.
struct NoisePlan {
  Vec sigma_q;
  Vec sigma_dq;
};
NoisePlan make_noise_plan(const Reference& ref, double t0, double dt, Eigen::Index steps,
                          const NoiseSpec& spec);

/// Steady-state tracking quality over the window t >= t0 + T, in degrees.
struct JointMetrics {
  double mase_deg = 0.0;    ///< max |e|
  double mae_deg = 0.0;     ///< mean |e|
  double rmse_deg = 0.0;
  double mase_deg_s = 0.0;  ///< max |de|
  double mae_deg_s = 0.0;
  double rmse_deg_s = 0.0;
};

struct Metrics {
  std::vector<JointMetrics> joints;
  double sup_e_norm_deg = 0.0;     ///< max ||e|| over the window
  double sup_de_norm_deg_s = 0.0;  ///< max ||de|| over the window
  double window_start = 0.0;
  Eigen::Index window_samples = 0;
};

/// Throws InvalidArgumentError for non-completed runs and
/// InsufficientWindowError when no sample falls in the window.
Metrics compute_metrics(const SimResult& result, double t0, double T);

}  // namespace ptpb
