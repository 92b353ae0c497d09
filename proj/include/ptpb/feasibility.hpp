#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ptpb/constraints.hpp"
#include "ptpb/model.hpp"
#include "ptpb/types.hpp"

namespace ptpb {

/// Worst-case state-rate envelope of the closed-loop flow inside the box:
/// ||dx/dt|| <= f_bar + g_bar * ||u||.
struct RateEnvelope {
  double f_bar = 0.0;
  double g_bar = 0.0;
};
RateEnvelope rate_envelope(const ModelBounds& bounds, const ConstraintBox& box);

/// Smallest horizon that any bounded-input trajectory needs to move worst_x0
/// into the eps-ball around x_ref: max(0, ||x0 - x_ref|| - eps) / (f_bar + g_bar u*).
double t_star(const ModelBounds& bounds, const ConstraintBox& box, double eps_ball,
              const JointState& x_ref, const JointState& worst_x0);

/// Admissible window for the funnel decay rate sigma given horizon T and target q_star.
struct SigmaBounds {
  double lower = 0.0;
  double upper = 0.0;
};
SigmaBounds sigma_bounds(const ModelBounds& bounds, const ConstraintBox& box, double T,
                         const Vec& q_star);

/// Input magnitude consumed by worst-case drift plus the sigma-funnel:
/// eta = C̄ v² + F̄ v + sigma M̄ v + Ḡ with v the velocity budget.
double authority_threshold(const ModelBounds& bounds, const ConstraintBox& box, double sigma);

/// Radius of the zero-velocity slice of the viable set:
/// max(0, T² (u_star - eta) / (k3 * M̄)).
double viable_radius(const ModelBounds& bounds, const ConstraintBox& box, double T,
                     double u_star_val, double sigma);

/// True when (q, dq) is a viable start: q inside the position box, the
/// funnel conditions -deps + sigma(q_hi - q) >= 0 and deps + sigma(q - q_lo) >= 0
/// hold with deps taken against the candidate's own settling profile, and the
/// acceleration demand (k3/T²)||q - q_star|| + (k4/T)||dq|| fits the authority
/// margin (u_star - eta)/M̄. Throws InvalidSigmaError for sigma outside
/// [sigma_lower, sigma_upper).
bool viable_membership(const ModelBounds& bounds, const ConstraintBox& box, double T,
                       double u_star_val, const Vec& q_star, double sigma,
                       const JointState& state);

/// Tag selecting the analytic zero-velocity slice as the authority region.
struct ZeroVelocitySlice {};

/// Minimum input authority and disturbance headroom over a region of starts.
struct Authority {
  double u_min = 0.0;
  double d_bar = 0.0;
};

/// Region = the zero-velocity slice at its full analytic radius (clipped to the box).
Authority control_authority(const ModelBounds& bounds, const ConstraintBox& box, double T,
                            double u_star_val, const Vec& q_star, double sigma,
                            ZeroVelocitySlice tag);

/// Region = an explicit set of member states (e.g. Monte-Carlo accepted samples).
Authority control_authority(const ModelBounds& bounds, const ConstraintBox& box, double T,
                            double u_star_val, const Vec& q_star, double sigma,
                            const std::vector<JointState>& region);

/// Seeded uniform classification of box states by a membership predicate.
/// Sample k draws from an independent stream derived from (seed, k), so the
/// result is identical under any parallel partitioning of the index range.
struct RegionSample {
  std::vector<JointState> accepted;
  double ratio = 0.0;
  int total = 0;
};
RegionSample monte_carlo_region(const std::function<bool(const JointState&)>& member,
                                const ConstraintBox& box, int sample_count, std::uint64_t seed);

/// Everything the feasibility analysis produces for one (box, bounds, T, q_star).
struct FeasibilityReport {
  double sigma_lower = 0.0;
  double sigma_upper = 0.0;
  double sigma = 0.0;        ///< the rate actually used (midpoint unless given)
  double t_star = 0.0;       ///< horizon lower bound from the worst box corner
  double u_star = 0.0;       ///< input budget min(||u_lo||, ||u_hi||)
  double eta = 0.0;          ///< authority threshold at `sigma`
  double viable_radius = 0.0;///< zero-velocity-slice radius [rad]
  double u_min = 0.0;        ///< authority needed over the slice
  double d_bar = 0.0;        ///< disturbance headroom u_star - u_min, floored at 0
  bool nonempty = false;
};

/// Assembles the report. `sigma` defaults to the midpoint of the admissible
/// window; an explicit sigma outside [lower, upper) raises InvalidSigmaError
/// when the window is nonempty. An empty window or exhausted authority is an
/// answer (nonempty = false), not an error.
FeasibilityReport feasibility_report(const ModelBounds& bounds, const ConstraintBox& box,
                                     double T, const Vec& q_star,
                                     std::optional<double> sigma = std::nullopt,
                                     double eps_ball = 0.01);

}  // namespace ptpb
