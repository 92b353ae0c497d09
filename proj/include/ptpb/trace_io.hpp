#pragma once

#include <string>
#include <vector>

#include "ptpb/feasibility.hpp"
#include "ptpb/simulate.hpp"
#include "ptpb/types.hpp"

namespace ptpb {

/// Writes one row per sample with columns
/// t, q_*, dq_*, e_*, edot_*, chi_*, xi_* (2n), K, Gamma, tau_*, u_*, d_*.
/// All angular quantities are radians; values are printed round-trip exact.
void write_trace_csv(const std::string& path, const SimResult& result);

/// Metrics document (degrees) plus run status.
void write_metrics_json(const std::string& path, const Metrics& metrics, RunStatus status);

/// Optional Monte-Carlo annotation for the feasibility document.
struct McSummary {
  int samples = 0;
  int accepted = 0;
  double ratio = 0.0;
};

/// Feasibility report document; radius reported in radians and degrees.
void write_feasibility_json(const std::string& path, const FeasibilityReport& report,
                            double horizon, const McSummary* mc);

/// Accepted viable starts, one row per state: q_* [rad], dq_* [rad/s].
void write_samples_csv(const std::string& path, const std::vector<JointState>& samples,
                       Eigen::Index dof);

}  // namespace ptpb
