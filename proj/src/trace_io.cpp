#include "ptpb/trace_io.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "ptpb/exceptions.hpp"

namespace ptpb {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open output file: " + path);
  return out;
}

/// Shortest representation that round-trips a double exactly.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const std::string& path, const SimResult& result) {
  std::ofstream out = open_out(path);
  const Eigen::Index n = result.dof();
  out << "t";
  const auto emit_cols = [&](const char* base, Eigen::Index count) {
    for (Eigen::Index j = 1; j <= count; ++j) out << ',' << base << '_' << j;
  };
  emit_cols("q", n);
  emit_cols("dq", n);
  emit_cols("e", n);
  emit_cols("edot", n);
  emit_cols("chi", n);
  emit_cols("xi", 2 * n);
  out << ",K,Gamma";
  emit_cols("tau", n);
  emit_cols("u", n);
  emit_cols("d", n);
  out << '\n';

  for (Eigen::Index r = 0; r < result.rows(); ++r) {
    out << num(result.t[static_cast<std::size_t>(r)]);
    const auto emit_row = [&](const Mat& m) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << num(m(r, j));
    };
    emit_row(result.q);
    emit_row(result.dq);
    emit_row(result.e);
    emit_row(result.de);
    emit_row(result.chi);
    emit_row(result.xi);
    out << ',' << num(result.k_gain[r]) << ',' << num(result.scale[r]);
    emit_row(result.tau);
    emit_row(result.u);
    emit_row(result.d);
    out << '\n';
  }
}

void write_metrics_json(const std::string& path, const Metrics& metrics, RunStatus status) {
  nlohmann::json doc;
  doc["status"] = to_string(status);
  doc["window_start_s"] = metrics.window_start;
  doc["window_samples"] = metrics.window_samples;
  doc["sup_error_norm_deg"] = metrics.sup_e_norm_deg;
  doc["sup_error_rate_norm_deg_per_s"] = metrics.sup_de_norm_deg_s;
  nlohmann::json joints = nlohmann::json::array();
  for (std::size_t j = 0; j < metrics.joints.size(); ++j) {
    const JointMetrics& jm = metrics.joints[j];
    joints.push_back({{"joint", j + 1},
                      {"mase_deg", jm.mase_deg},
                      {"mae_deg", jm.mae_deg},
                      {"rmse_deg", jm.rmse_deg},
                      {"mase_deg_per_s", jm.mase_deg_s},
                      {"mae_deg_per_s", jm.mae_deg_s},
                      {"rmse_deg_per_s", jm.rmse_deg_s}});
  }
  doc["joints"] = std::move(joints);
  open_out(path) << doc.dump(2) << '\n';
}

void write_feasibility_json(const std::string& path, const FeasibilityReport& report,
                            double horizon, const McSummary* mc) {
  nlohmann::json doc;
  doc["horizon_s"] = horizon;
  doc["sigma_lower"] = report.sigma_lower;
  doc["sigma_upper"] = report.sigma_upper;
  doc["sigma"] = report.sigma;
  doc["t_star_s"] = report.t_star;
  doc["u_star_nm"] = report.u_star;
  doc["eta_nm"] = report.eta;
  doc["viable_radius_rad"] = report.viable_radius;
  doc["viable_radius_deg"] = rad2deg(report.viable_radius);
  doc["u_min_nm"] = report.u_min;
  doc["d_bar_nm"] = report.d_bar;
  doc["nonempty"] = report.nonempty;
  if (mc) {
    doc["monte_carlo"] = {{"samples", mc->samples},
                          {"accepted", mc->accepted},
                          {"ratio", mc->ratio}};
  } else {
    doc["monte_carlo"] = nullptr;
  }
  open_out(path) << doc.dump(2) << '\n';
}

void write_samples_csv(const std::string& path, const std::vector<JointState>& samples,
                       Eigen::Index dof) {
  std::ofstream out = open_out(path);
  for (Eigen::Index j = 1; j <= dof; ++j) out << (j == 1 ? "" : ",") << "q_" << j;
  for (Eigen::Index j = 1; j <= dof; ++j) out << ",dq_" << j;
  out << '\n';
  for (const JointState& s : samples) {
    for (Eigen::Index j = 0; j < dof; ++j) out << (j == 0 ? "" : ",") << num(s.q[j]);
    for (Eigen::Index j = 0; j < dof; ++j) out << ',' << num(s.dq[j]);
    out << '\n';
  }
}

}  // namespace ptpb
