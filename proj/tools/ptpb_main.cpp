#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ptpb/config.hpp"
#include "ptpb/exceptions.hpp"
#include "ptpb/feasibility.hpp"
#include "ptpb/simulate.hpp"
#include "ptpb/svg_plot.hpp"
#include "ptpb/trace_io.hpp"

namespace fs = std::filesystem;
using namespace ptpb;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRunFailed = 4;

/// Exit-code discipline: malformed configuration is 2, a well-formed but
/// invalid/infeasible setup is 3, a run that failed mid-flight is 4.
int classify(const Error& err) {
  if (dynamic_cast<const ConfigError*>(&err)) return kExitConfig;
  return kExitValidation;
}

ModelBounds estimated_bounds(const RunConfig& cfg) {
  return estimate_bounds(*cfg.scenario.model, cfg.scenario.box, cfg.feasibility.bound_samples,
                         cfg.feasibility.safety);
}

Vec feasibility_target(const RunConfig& cfg) {
  if (cfg.feasibility.q_star) return *cfg.feasibility.q_star;
  return cfg.scenario.ref.q(cfg.scenario.t0);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed_override, bool svg) {
  RunConfig cfg = load_config(config_path);
  if (seed_override) cfg.scenario.seed = *seed_override;
  cfg.scenario.bounds = estimated_bounds(cfg);
  fs::create_directories(out_dir);

  const SimResult result = run_scenario(cfg.scenario);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), result);

  if (result.status != RunStatus::Completed) {
    std::cerr << "run failed: " << to_string(result.status) << " at t = " << result.fail_time
              << " s (" << result.message << ")\n";
    return kExitRunFailed;
  }

  const Metrics metrics = compute_metrics(result, cfg.scenario.t0, cfg.scenario.T);
  write_metrics_json((fs::path(out_dir) / "metrics.json").string(), metrics, result.status);
  if (svg)
    write_tracking_svg((fs::path(out_dir) / "tracking.svg").string(), result, cfg.scenario.ref,
                       cfg.scenario.t0, cfg.scenario.T);

  std::cout << "status = completed\n";
  std::cout << "steady-state window from t = " << metrics.window_start << " s ("
            << metrics.window_samples << " samples)\n";
  for (std::size_t j = 0; j < metrics.joints.size(); ++j) {
    const JointMetrics& jm = metrics.joints[j];
    std::printf("joint %zu: MASE %.6g deg  MAE %.6g deg  RMSE %.6g deg\n", j + 1, jm.mase_deg,
                jm.mae_deg, jm.rmse_deg);
  }
  std::printf("sup ||e|| = %.6g deg, sup ||edot|| = %.6g deg/s\n", metrics.sup_e_norm_deg,
              metrics.sup_de_norm_deg_s);
  return kExitOk;
}

int cmd_feasibility(const std::string& config_path, const std::string& out_dir,
                    std::optional<int> samples_override) {
  RunConfig cfg = load_config(config_path);
  const ModelBounds bounds = estimated_bounds(cfg);
  const Vec q_star = feasibility_target(cfg);
  const double T = cfg.scenario.T;
  fs::create_directories(out_dir);

  const FeasibilityReport report = feasibility_report(bounds, cfg.scenario.box, T, q_star,
                                                      cfg.feasibility.sigma,
                                                      cfg.feasibility.epsilon);

  const int samples = samples_override.value_or(cfg.feasibility.samples);
  std::optional<McSummary> mc;
  std::vector<JointState> accepted;
  if (report.nonempty && samples >= 1) {
    const RegionSample region = monte_carlo_region(
        [&](const JointState& s) {
          return viable_membership(bounds, cfg.scenario.box, T, report.u_star, q_star,
                                   report.sigma, s);
        },
        cfg.scenario.box, samples, cfg.feasibility.seed);
    mc = McSummary{region.total, static_cast<int>(region.accepted.size()), region.ratio};
    accepted = std::move(region.accepted);
  }

  write_feasibility_json((fs::path(out_dir) / "feasibility.json").string(), report, T,
                         mc ? &*mc : nullptr);
  write_samples_csv((fs::path(out_dir) / "viable_samples.csv").string(), accepted,
                    cfg.scenario.box.dof());

  std::printf("sigma_lower       = %.6g 1/s\n", report.sigma_lower);
  std::printf("sigma_upper       = %.6g 1/s\n", report.sigma_upper);
  std::printf("sigma             = %.6g 1/s\n", report.sigma);
  std::printf("t_star            = %.6g s\n", report.t_star);
  std::printf("u_star            = %.6g Nm\n", report.u_star);
  std::printf("eta               = %.6g Nm\n", report.eta);
  std::printf("viable_radius     = %.6g rad (%.6g deg)\n", report.viable_radius,
              rad2deg(report.viable_radius));
  std::printf("u_min             = %.6g Nm\n", report.u_min);
  std::printf("d_bar             = %.6g Nm\n", report.d_bar);
  std::printf("nonempty          = %s\n", report.nonempty ? "true" : "false");
  if (mc)
    std::printf("monte_carlo ratio = %.6g (%d of %d accepted)\n", mc->ratio, mc->accepted,
                mc->samples);
  return kExitOk;
}

struct SweepCell {
  std::size_t index = 0;
  double T = 0.0;
  std::optional<double> offset_rad;
  std::uint64_t seed = 0;
};

struct CellOutcome {
  bool validation_failed = false;
  RunStatus status = RunStatus::Completed;
  std::string message;
  std::optional<Metrics> metrics;
};

std::string csv_safe(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, unsigned jobs) {
  RunConfig cfg = load_config(config_path);
  if (!cfg.sweep)
    throw ValidationError("sweep: the config declares no sweep section");
  const SweepSettings& sw = *cfg.sweep;
  if (!sw.horizons && !sw.offsets_rad && !sw.seeds)
    throw ValidationError("sweep: no sweep axis declared (prescribed_times_s, offsets_deg, seeds)");
  if ((sw.horizons && sw.horizons->empty()) || (sw.offsets_rad && sw.offsets_rad->empty()) ||
      (sw.seeds && sw.seeds->empty()))
    throw ValidationError("sweep: a declared sweep axis is empty");

  const std::vector<double> horizons = sw.horizons.value_or(std::vector<double>{cfg.scenario.T});
  const std::vector<std::optional<double>> offsets = [&] {
    std::vector<std::optional<double>> out;
    if (sw.offsets_rad)
      for (double v : *sw.offsets_rad) out.emplace_back(v);
    else
      out.emplace_back(std::nullopt);
    return out;
  }();
  const std::vector<std::uint64_t> seeds =
      sw.seeds.value_or(std::vector<std::uint64_t>{cfg.scenario.seed});

  const ModelBounds bounds = estimated_bounds(cfg);
  fs::create_directories(out_dir);

  std::vector<SweepCell> cells;
  for (double T : horizons)
    for (const auto& offset : offsets)
      for (std::uint64_t seed : seeds)
        cells.push_back(SweepCell{cells.size(), T, offset, seed});

  std::vector<CellOutcome> outcomes(cells.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers =
      std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(cells.size())));

  const auto run_cell = [&](const SweepCell& cell) {
    CellOutcome& out = outcomes[cell.index];
    char dir_name[32];
    std::snprintf(dir_name, sizeof(dir_name), "cell_%03zu", cell.index);
    const fs::path cell_dir = fs::path(out_dir) / dir_name;
    try {
      Scenario sc = cfg.scenario;
      sc.T = cell.T;
      sc.seed = cell.seed;
      sc.bounds = bounds;
      if (cell.offset_rad) {
        sc.x0.q = sc.ref.q(sc.t0).array() + *cell.offset_rad;
      }
      const SimResult result = run_scenario(sc);
      fs::create_directories(cell_dir);
      write_trace_csv((cell_dir / "trace.csv").string(), result);
      out.status = result.status;
      out.message = result.message;
      if (result.status == RunStatus::Completed) {
        out.metrics = compute_metrics(result, sc.t0, sc.T);
        write_metrics_json((cell_dir / "metrics.json").string(), *out.metrics, result.status);
      }
    } catch (const Error& err) {
      out.validation_failed = true;
      out.message = err.what();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        run_cell(cells[i]);
      }
    });
  }
  for (std::thread& th : pool) th.join();

  const Eigen::Index n = cfg.scenario.box.dof();
  std::ofstream summary(fs::path(out_dir) / "summary.csv");
  if (!summary) throw Error("cannot open summary.csv for writing");
  summary << "cell,prescribed_time_s,offset_deg,seed,status,message";
  summary << ",sup_error_norm_deg,sup_error_rate_norm_deg_per_s";
  for (Eigen::Index j = 1; j <= n; ++j)
    summary << ",mase_deg_j" << j << ",mae_deg_j" << j << ",rmse_deg_j" << j
            << ",mase_deg_per_s_j" << j << ",mae_deg_per_s_j" << j << ",rmse_deg_per_s_j" << j;
  summary << '\n';

  bool any_validation_failure = false;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& cell = cells[i];
    const CellOutcome& out = outcomes[i];
    any_validation_failure = any_validation_failure || out.validation_failed;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "cell_%03zu", i);
    summary << buf << ',' << cell.T << ',';
    if (cell.offset_rad) summary << rad2deg(*cell.offset_rad);
    summary << ',' << cell.seed << ','
            << (out.validation_failed ? "validation-error" : to_string(out.status)) << ','
            << csv_safe(out.message);
    if (out.metrics) {
      summary << ',' << out.metrics->sup_e_norm_deg << ',' << out.metrics->sup_de_norm_deg_s;
      for (const JointMetrics& jm : out.metrics->joints)
        summary << ',' << jm.mase_deg << ',' << jm.mae_deg << ',' << jm.rmse_deg << ','
                << jm.mase_deg_s << ',' << jm.mae_deg_s << ',' << jm.rmse_deg_s;
    } else {
      summary << ",,";
      for (Eigen::Index j = 0; j < n; ++j) summary << ",,,,,,";
    }
    summary << '\n';
  }
  summary.close();

  std::size_t completed = 0;
  for (const CellOutcome& out : outcomes)
    if (!out.validation_failed && out.status == RunStatus::Completed) ++completed;
  std::cout << completed << " of " << cells.size() << " cells completed; summary in "
            << (fs::path(out_dir) / "summary.csv").string() << '\n';

  return any_validation_failure ? kExitValidation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop simulator and feasibility analyzer for an adaptive barrier "
               "controller on constrained manipulators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";

  CLI::App* sim = app.add_subcommand("simulate", "Run a scenario; write trace.csv and metrics.json");
  sim->add_option("--config", config_path, "Path to a JSON scenario config")->required();
  sim->add_option("--out", out_dir, "Output directory (default: current)");
  std::optional<std::uint64_t> seed_override;
  sim->add_option("--seed", seed_override, "Override the scenario seed");
  bool svg = false;
  sim->add_flag("--svg", svg, "Also write tracking.svg");

  CLI::App* feas = app.add_subcommand(
      "feasibility", "Analyze the viable set; write feasibility.json and viable_samples.csv");
  feas->add_option("--config", config_path, "Path to a JSON scenario config")->required();
  feas->add_option("--out", out_dir, "Output directory (default: current)");
  std::optional<int> samples_override;
  feas->add_option("--samples", samples_override, "Override the Monte-Carlo sample count");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Run a horizon/offset/seed cross product; write per-cell outputs and summary.csv");
  sweep->add_option("--config", config_path, "Path to a JSON scenario config")->required();
  sweep->add_option("--out", out_dir, "Output directory (default: current)");
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  sweep->add_option("--jobs", jobs, "Concurrent scenario workers");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path, out_dir, seed_override, svg);
    if (feas->parsed()) return cmd_feasibility(config_path, out_dir, samples_override);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir, jobs);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return classify(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
