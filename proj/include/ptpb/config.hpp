#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ptpb/feasibility.hpp"
#include "ptpb/simulate.hpp"

namespace ptpb {

inline constexpr int kConfigVersion = 1;

/// Feasibility-analysis settings from the config file (angles already in radians).
struct FeasibilitySettings {
  std::optional<Vec> q_star;       ///< defaults to the reference position at t0
  std::optional<double> sigma;     ///< defaults to the admissible-window midpoint
  int samples = 10000;             ///< Monte-Carlo sample count
  std::uint64_t seed = 2024;       ///< Monte-Carlo seed
  double epsilon = 0.01;           ///< target-ball radius [rad]
  int bound_samples = 16384;       ///< samples for estimate_bounds
  double safety = 1.1;             ///< inflation factor for estimate_bounds
};

/// Sweep axes; absent axes reuse the base scenario's value as a single cell.
struct SweepSettings {
  std::optional<std::vector<double>> horizons;      ///< prescribed_times_s
  std::optional<std::vector<double>> offsets_rad;   ///< initial offsets (per-joint uniform)
  std::optional<std::vector<std::uint64_t>> seeds;
};

/// A parsed configuration document: a full Scenario plus analysis settings.
/// All angles are converted from degrees (file) to radians here.
struct RunConfig {
  Scenario scenario;
  PlanarArmParams arm_params;
  FeasibilitySettings feasibility;
  std::optional<SweepSettings> sweep;
};

/// Parses and strictly validates a JSON config document. Unknown keys, wrong
/// types, missing required sections, or an unsupported config_version throw
/// ConfigError. Semantic problems (dimension mismatches, bad gain ranges, ...)
/// are left to validate_scenario.
RunConfig load_config(const std::string& path);

/// Same, from an in-memory document (used by tests).
RunConfig parse_config(const std::string& text, const std::string& origin = "<memory>");

/// Serializes a parsed config back to an equivalent JSON document (degrees).
std::string dump_config(const RunConfig& cfg);

}  // namespace ptpb
