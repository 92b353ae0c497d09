#include "ptpb/constraints.hpp"

#include <algorithm>

#include "ptpb/exceptions.hpp"

namespace ptpb {

void validate_box(const ConstraintBox& box) {
  const Eigen::Index n = box.q_lo.size();
  if (n == 0) throw EmptyBoxError("constraint box: zero degrees of freedom");
  const auto same = [n](const Vec& v) { return v.size() == n; };
  if (!same(box.q_hi) || !same(box.dq_lo) || !same(box.dq_hi) || !same(box.u_lo) ||
      !same(box.u_hi))
    throw EmptyBoxError("constraint box: bound vectors have mismatched dimensions");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(box.q_lo[i] < box.q_hi[i]))
      throw EmptyBoxError("constraint box: position bounds empty at joint " + std::to_string(i + 1));
    if (!(box.dq_lo[i] < box.dq_hi[i]))
      throw EmptyBoxError("constraint box: velocity bounds empty at joint " + std::to_string(i + 1));
    if (!(box.u_lo[i] < 0.0 && 0.0 < box.u_hi[i]))
      throw EmptyBoxError("constraint box: zero input not interior at joint " + std::to_string(i + 1));
  }
  if (!all_finite(box.q_lo) || !all_finite(box.q_hi) || !all_finite(box.dq_lo) ||
      !all_finite(box.dq_hi) || !all_finite(box.u_lo) || !all_finite(box.u_hi))
    throw EmptyBoxError("constraint box: non-finite bounds");
}

bool inside_position_box(const ConstraintBox& box, const Vec& q, bool strict) {
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (strict ? !(box.q_lo[i] < q[i] && q[i] < box.q_hi[i])
               : !(box.q_lo[i] <= q[i] && q[i] <= box.q_hi[i]))
      return false;
  }
  return true;
}

bool inside_state_box(const ConstraintBox& box, const JointState& s, bool strict) {
  if (!inside_position_box(box, s.q, strict)) return false;
  for (Eigen::Index i = 0; i < s.dq.size(); ++i) {
    if (strict ? !(box.dq_lo[i] < s.dq[i] && s.dq[i] < box.dq_hi[i])
               : !(box.dq_lo[i] <= s.dq[i] && s.dq[i] <= box.dq_hi[i]))
      return false;
  }
  return true;
}

double input_budget(const ConstraintBox& box) {
  return std::min(box.u_lo.norm(), box.u_hi.norm());
}

double velocity_budget(const ConstraintBox& box) { return box.dq_hi.norm(); }

}  // namespace ptpb
