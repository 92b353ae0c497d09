#include "ptpb/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <initializer_list>
#include <memory>
#include <sstream>
#include <string>

#include "ptpb/exceptions.hpp"

namespace ptpb {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known)
      throw ConfigError("config: unknown key \"" + item.key() + "\" in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end())
    throw ConfigError("config: missing required key \"" + std::string(key) + "\" in " + where);
  return *it;
}

const json* optional_key(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

json expect_object(const json& v, const std::string& where) {
  if (!v.is_object()) throw ConfigError("config: " + where + " must be an object");
  return v;
}

double expect_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError("config: " + where + " must be a number");
  return v.get<double>();
}

int expect_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError("config: " + where + " must be an integer");
  return v.get<int>();
}

std::uint64_t expect_u64(const json& v, const std::string& where) {
  if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
    throw ConfigError("config: " + where + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

std::string expect_string(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError("config: " + where + " must be a string");
  return v.get<std::string>();
}

Vec expect_vec(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError("config: " + where + " must be a nonempty array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const auto& item : v) {
    if (!item.is_number()) throw ConfigError("config: " + where + " must contain only numbers");
    out[i++] = item.get<double>();
  }
  return out;
}

Vec expect_vec_n(const json& v, const std::string& where, Eigen::Index n) {
  Vec out = expect_vec(v, where);
  if (out.size() != n)
    throw ConfigError("config: " + where + " must have exactly " + std::to_string(n) +
                      " entries");
  return out;
}

PlanarArmParams parse_model(const json& node, int& dof_out) {
  expect_object(node, "model");
  check_keys(node, "model",
             {"type", "masses_kg", "lengths_m", "com_offsets_m", "inertias_kgm2", "gravity_mps2",
              "viscous_friction_nms"});
  const std::string type = expect_string(require(node, "type", "model"), "model.type");
  if (type != "planar_arm")
    throw ConfigError("config: model.type must be \"planar_arm\", got \"" + type + "\"");
  dof_out = 2;
  PlanarArmParams p;
  if (const json* v = optional_key(node, "masses_kg")) {
    const Vec m = expect_vec_n(*v, "model.masses_kg", 2);
    p.m1 = m[0];
    p.m2 = m[1];
  }
  if (const json* v = optional_key(node, "lengths_m")) {
    const Vec l = expect_vec_n(*v, "model.lengths_m", 2);
    p.l1 = l[0];
    p.l2 = l[1];
  }
  if (const json* v = optional_key(node, "com_offsets_m")) {
    const Vec c = expect_vec_n(*v, "model.com_offsets_m", 2);
    p.lc1 = c[0];
    p.lc2 = c[1];
  }
  if (const json* v = optional_key(node, "inertias_kgm2")) {
    const Vec i = expect_vec_n(*v, "model.inertias_kgm2", 2);
    p.inertia1 = i[0];
    p.inertia2 = i[1];
  }
  if (const json* v = optional_key(node, "gravity_mps2"))
    p.gravity = expect_number(*v, "model.gravity_mps2");
  if (const json* v = optional_key(node, "viscous_friction_nms")) {
    const Vec b = expect_vec_n(*v, "model.viscous_friction_nms", 2);
    p.damping1 = b[0];
    p.damping2 = b[1];
  }
  return p;
}

ConstraintBox parse_constraints(const json& node) {
  expect_object(node, "constraints");
  check_keys(node, "constraints",
             {"q_min_deg", "q_max_deg", "dq_min_deg_s", "dq_max_deg_s", "u_min_nm", "u_max_nm"});
  ConstraintBox box;
  box.q_lo = deg2rad(expect_vec(require(node, "q_min_deg", "constraints"), "constraints.q_min_deg"));
  box.q_hi = deg2rad(expect_vec(require(node, "q_max_deg", "constraints"), "constraints.q_max_deg"));
  box.dq_lo =
      deg2rad(expect_vec(require(node, "dq_min_deg_s", "constraints"), "constraints.dq_min_deg_s"));
  box.dq_hi =
      deg2rad(expect_vec(require(node, "dq_max_deg_s", "constraints"), "constraints.dq_max_deg_s"));
  box.u_lo = expect_vec(require(node, "u_min_nm", "constraints"), "constraints.u_min_nm");
  box.u_hi = expect_vec(require(node, "u_max_nm", "constraints"), "constraints.u_max_nm");
  return box;
}

GainSet parse_gains(const json& node) {
  expect_object(node, "gains");
  check_keys(node, "gains", {"kp", "rho", "varpi", "gamma", "alpha", "kappa", "c"});
  GainSet g;
  g.kp = expect_vec(require(node, "kp", "gains"), "gains.kp");
  g.rho = expect_number(require(node, "rho", "gains"), "gains.rho");
  g.varpi = expect_number(require(node, "varpi", "gains"), "gains.varpi");
  g.gamma = expect_number(require(node, "gamma", "gains"), "gains.gamma");
  g.alpha = expect_number(require(node, "alpha", "gains"), "gains.alpha");
  g.kappa = expect_number(require(node, "kappa", "gains"), "gains.kappa");
  g.margin = optional_key(node, "c") ? expect_number(*optional_key(node, "c"), "gains.c")
                                     : g.varpi;
  return g;
}

Reference parse_reference(const json& node) {
  expect_object(node, "reference");
  const std::string type = expect_string(require(node, "type", "reference"), "reference.type");
  if (type == "setpoint") {
    check_keys(node, "reference", {"type", "q_star_deg"});
    return Reference::setpoint(
        deg2rad(expect_vec(require(node, "q_star_deg", "reference"), "reference.q_star_deg")));
  }
  if (type == "sinusoid") {
    check_keys(node, "reference", {"type", "amplitude_deg", "omega_rad_s", "phase_deg"});
    const Vec amp =
        deg2rad(expect_vec(require(node, "amplitude_deg", "reference"), "reference.amplitude_deg"));
    const Vec omega =
        expect_vec(require(node, "omega_rad_s", "reference"), "reference.omega_rad_s");
    Vec phase = Vec::Zero(amp.size());
    if (const json* v = optional_key(node, "phase_deg"))
      phase = deg2rad(expect_vec(*v, "reference.phase_deg"));
    return Reference::sinusoid(amp, omega, phase);
  }
  throw ConfigError("config: reference.type must be \"setpoint\" or \"sinusoid\", got \"" + type +
                    "\"");
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError("config: cannot parse " + origin + ": " + err.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level of " + origin + " must be an object");
  check_keys(doc, "the top level",
             {"config_version", "model", "constraints", "gains", "reference", "initial_state",
              "timing", "disturbance", "noise", "integrator", "filter", "seed", "feasibility",
              "sweep"});
  const int version = expect_int(require(doc, "config_version", "the top level"), "config_version");
  if (version != kConfigVersion)
    throw ConfigError("config: unsupported config_version " + std::to_string(version) +
                      " (expected " + std::to_string(kConfigVersion) + ")");

  RunConfig cfg;
  int dof = 0;
  cfg.arm_params = parse_model(require(doc, "model", "the top level"), dof);
  cfg.scenario.model = std::make_shared<PlanarArm>(cfg.arm_params);
  cfg.scenario.box = parse_constraints(require(doc, "constraints", "the top level"));
  cfg.scenario.gains = parse_gains(require(doc, "gains", "the top level"));
  cfg.scenario.ref = parse_reference(require(doc, "reference", "the top level"));

  {
    const json& node = expect_object(require(doc, "initial_state", "the top level"), "initial_state");
    check_keys(node, "initial_state", {"q_deg", "dq_deg_s"});
    cfg.scenario.x0.q =
        deg2rad(expect_vec(require(node, "q_deg", "initial_state"), "initial_state.q_deg"));
    cfg.scenario.x0.dq =
        deg2rad(expect_vec(require(node, "dq_deg_s", "initial_state"), "initial_state.dq_deg_s"));
  }
  {
    const json& node = expect_object(require(doc, "timing", "the top level"), "timing");
    check_keys(node, "timing", {"t0_s", "prescribed_time_s", "duration_s", "dt_s"});
    if (const json* v = optional_key(node, "t0_s"))
      cfg.scenario.t0 = expect_number(*v, "timing.t0_s");
    cfg.scenario.T =
        expect_number(require(node, "prescribed_time_s", "timing"), "timing.prescribed_time_s");
    cfg.scenario.duration =
        expect_number(require(node, "duration_s", "timing"), "timing.duration_s");
    if (const json* v = optional_key(node, "dt_s"))
      cfg.scenario.dt = expect_number(*v, "timing.dt_s");
  }
  if (const json* node = optional_key(doc, "disturbance")) {
    expect_object(*node, "disturbance");
    check_keys(*node, "disturbance", {"max_nm"});
    cfg.scenario.disturbance.enabled = true;
    cfg.scenario.disturbance.max =
        expect_vec(require(*node, "max_nm", "disturbance"), "disturbance.max_nm");
  }
  if (const json* node = optional_key(doc, "noise")) {
    expect_object(*node, "noise");
    check_keys(*node, "noise", {"snr_db"});
    cfg.scenario.noise.enabled = true;
    cfg.scenario.noise.snr_db = expect_number(require(*node, "snr_db", "noise"), "noise.snr_db");
  }
  if (const json* node = optional_key(doc, "integrator")) {
    expect_object(*node, "integrator");
    check_keys(*node, "integrator", {"control_update"});
    const std::string mode = expect_string(require(*node, "control_update", "integrator"),
                                           "integrator.control_update");
    if (mode == "per_stage") cfg.scenario.update = ControlUpdate::PerStage;
    else if (mode == "per_step") cfg.scenario.update = ControlUpdate::PerStep;
    else
      throw ConfigError(
          "config: integrator.control_update must be \"per_stage\" or \"per_step\", got \"" +
          mode + "\"");
  }
  if (const json* node = optional_key(doc, "filter")) {
    expect_object(*node, "filter");
    check_keys(*node, "filter", {"form"});
    const std::string form = expect_string(require(*node, "form", "filter"), "filter.form");
    if (form == "direct") cfg.scenario.filter = FilterMode::Direct;
    else if (form == "sqrt") cfg.scenario.filter = FilterMode::Sqrt;
    else throw ConfigError("config: filter.form must be \"direct\" or \"sqrt\", got \"" + form + "\"");
  }
  if (const json* v = optional_key(doc, "seed")) cfg.scenario.seed = expect_u64(*v, "seed");

  if (const json* node = optional_key(doc, "feasibility")) {
    expect_object(*node, "feasibility");
    check_keys(*node, "feasibility",
               {"q_star_deg", "sigma", "samples", "seed", "epsilon_rad", "bound_samples",
                "safety"});
    if (const json* v = optional_key(*node, "q_star_deg"))
      cfg.feasibility.q_star = deg2rad(expect_vec(*v, "feasibility.q_star_deg"));
    if (const json* v = optional_key(*node, "sigma"))
      cfg.feasibility.sigma = expect_number(*v, "feasibility.sigma");
    if (const json* v = optional_key(*node, "samples"))
      cfg.feasibility.samples = expect_int(*v, "feasibility.samples");
    if (const json* v = optional_key(*node, "seed"))
      cfg.feasibility.seed = expect_u64(*v, "feasibility.seed");
    if (const json* v = optional_key(*node, "epsilon_rad"))
      cfg.feasibility.epsilon = expect_number(*v, "feasibility.epsilon_rad");
    if (const json* v = optional_key(*node, "bound_samples"))
      cfg.feasibility.bound_samples = expect_int(*v, "feasibility.bound_samples");
    if (const json* v = optional_key(*node, "safety"))
      cfg.feasibility.safety = expect_number(*v, "feasibility.safety");
  }
  cfg.scenario.feas_epsilon = cfg.feasibility.epsilon;

  if (const json* node = optional_key(doc, "sweep")) {
    expect_object(*node, "sweep");
    check_keys(*node, "sweep", {"prescribed_times_s", "offsets_deg", "seeds"});
    SweepSettings sweep;
    if (const json* v = optional_key(*node, "prescribed_times_s")) {
      if (!v->is_array()) throw ConfigError("config: sweep.prescribed_times_s must be an array");
      sweep.horizons.emplace();
      for (const auto& item : *v)
        sweep.horizons->push_back(expect_number(item, "sweep.prescribed_times_s entry"));
    }
    if (const json* v = optional_key(*node, "offsets_deg")) {
      if (!v->is_array()) throw ConfigError("config: sweep.offsets_deg must be an array");
      sweep.offsets_rad.emplace();
      for (const auto& item : *v)
        sweep.offsets_rad->push_back(deg2rad(expect_number(item, "sweep.offsets_deg entry")));
    }
    if (const json* v = optional_key(*node, "seeds")) {
      if (!v->is_array()) throw ConfigError("config: sweep.seeds must be an array");
      sweep.seeds.emplace();
      for (const auto& item : *v) sweep.seeds->push_back(expect_u64(item, "sweep.seeds entry"));
    }
    cfg.sweep = std::move(sweep);
  }

  (void)dof;
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string dump_config(const RunConfig& cfg) {
  json doc;
  doc["config_version"] = kConfigVersion;

  const PlanarArmParams& p = cfg.arm_params;
  doc["model"] = {{"type", "planar_arm"},
                  {"masses_kg", {p.m1, p.m2}},
                  {"lengths_m", {p.l1, p.l2}},
                  {"com_offsets_m", {p.lc1, p.lc2}},
                  {"inertias_kgm2", {p.inertia1, p.inertia2}},
                  {"gravity_mps2", p.gravity},
                  {"viscous_friction_nms", {p.damping1, p.damping2}}};

  const auto vec_to_json = [](const Vec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
  };
  const Scenario& sc = cfg.scenario;
  doc["constraints"] = {{"q_min_deg", vec_to_json(rad2deg(sc.box.q_lo))},
                        {"q_max_deg", vec_to_json(rad2deg(sc.box.q_hi))},
                        {"dq_min_deg_s", vec_to_json(rad2deg(sc.box.dq_lo))},
                        {"dq_max_deg_s", vec_to_json(rad2deg(sc.box.dq_hi))},
                        {"u_min_nm", vec_to_json(sc.box.u_lo)},
                        {"u_max_nm", vec_to_json(sc.box.u_hi)}};
  doc["gains"] = {{"kp", vec_to_json(sc.gains.kp)}, {"rho", sc.gains.rho},
                  {"varpi", sc.gains.varpi},        {"gamma", sc.gains.gamma},
                  {"alpha", sc.gains.alpha},        {"kappa", sc.gains.kappa},
                  {"c", sc.gains.margin}};
  if (sc.ref.is_setpoint()) {
    doc["reference"] = {{"type", "setpoint"}, {"q_star_deg", vec_to_json(rad2deg(sc.ref.target()))}};
  } else {
    doc["reference"] = {{"type", "sinusoid"},
                        {"amplitude_deg", vec_to_json(rad2deg(sc.ref.amplitude()))},
                        {"omega_rad_s", vec_to_json(sc.ref.omega())},
                        {"phase_deg", vec_to_json(rad2deg(sc.ref.phase()))}};
  }
  doc["initial_state"] = {{"q_deg", vec_to_json(rad2deg(sc.x0.q))},
                          {"dq_deg_s", vec_to_json(rad2deg(sc.x0.dq))}};
  doc["timing"] = {{"t0_s", sc.t0},
                   {"prescribed_time_s", sc.T},
                   {"duration_s", sc.duration},
                   {"dt_s", sc.dt}};
  if (sc.disturbance.enabled) doc["disturbance"] = {{"max_nm", vec_to_json(sc.disturbance.max)}};
  if (sc.noise.enabled) doc["noise"] = {{"snr_db", sc.noise.snr_db}};
  doc["integrator"] = {
      {"control_update", sc.update == ControlUpdate::PerStage ? "per_stage" : "per_step"}};
  doc["filter"] = {{"form", sc.filter == FilterMode::Direct ? "direct" : "sqrt"}};
  doc["seed"] = sc.seed;

  json feas;
  if (cfg.feasibility.q_star) feas["q_star_deg"] = vec_to_json(rad2deg(*cfg.feasibility.q_star));
  if (cfg.feasibility.sigma) feas["sigma"] = *cfg.feasibility.sigma;
  feas["samples"] = cfg.feasibility.samples;
  feas["seed"] = cfg.feasibility.seed;
  feas["epsilon_rad"] = cfg.feasibility.epsilon;
  feas["bound_samples"] = cfg.feasibility.bound_samples;
  feas["safety"] = cfg.feasibility.safety;
  doc["feasibility"] = std::move(feas);

  if (cfg.sweep) {
    json sweep = json::object();
    if (cfg.sweep->horizons) sweep["prescribed_times_s"] = *cfg.sweep->horizons;
    if (cfg.sweep->offsets_rad) {
      json arr = json::array();
      for (double v : *cfg.sweep->offsets_rad) arr.push_back(rad2deg(v));
      sweep["offsets_deg"] = std::move(arr);
    }
    if (cfg.sweep->seeds) sweep["seeds"] = *cfg.sweep->seeds;
    doc["sweep"] = std::move(sweep);
  }
  return doc.dump(2);
}

}  // namespace ptpb
