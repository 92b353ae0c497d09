#pragma once

#include "ptpb/types.hpp"

namespace ptpb {

/// Axis-aligned operating box: joint positions, joint velocities, and inputs.
struct ConstraintBox {
  Vec q_lo;   ///< position lower bounds [rad]
  Vec q_hi;   ///< position upper bounds [rad]
  Vec dq_lo;  ///< velocity lower bounds [rad/s]
  Vec dq_hi;  ///< velocity upper bounds [rad/s]
  Vec u_lo;   ///< input lower bounds [N m]
  Vec u_hi;   ///< input upper bounds [N m]

  Eigen::Index dof() const { return q_lo.size(); }
};

/// Throws EmptyBoxError unless all six bound vectors share one dimension,
/// every lower bound is strictly below its upper bound, and zero input is
/// strictly interior to [u_lo, u_hi].
void validate_box(const ConstraintBox& box);

/// True when q lies inside [q_lo, q_hi] (strict or closed).
bool inside_position_box(const ConstraintBox& box, const Vec& q, bool strict);

/// True when (q, dq) lies inside the position and velocity boxes (strict or closed).
bool inside_state_box(const ConstraintBox& box, const JointState& s, bool strict);

/// Guaranteed input budget: min(||u_lo||, ||u_hi||) in the Euclidean norm.
double input_budget(const ConstraintBox& box);

/// Euclidean norm of the velocity upper-bound vector.
double velocity_budget(const ConstraintBox& box);

}  // namespace ptpb
