#include "ltsg/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "ltsg/errors.hpp"

namespace ltsg {

using nlohmann::json;

void ScenarioConfig::validate() const {
  elements.validate();
  if (!(mu > 0.0)) throw ConfigError("mu must be positive");
  if (!nominal_rel_state.allFinite())
    throw ConfigError("nominal_rel_state must be finite");
  if (!(integrator_dt > 0.0)) throw ConfigError("integrator_dt must be positive");
  if (!(control_dt >= integrator_dt))
    throw ConfigError("control_dt must be >= integrator_dt");
  if (!(sim_duration >= 0.0)) throw ConfigError("sim_duration must be nonnegative");
  if (mc.runs < 1) throw ConfigError("mc.runs must be >= 1");
  if (!(mc.sigma_pos >= 0.0) || !(mc.sigma_vel >= 0.0))
    throw ConfigError("mc sigmas must be nonnegative");
  if (!(completion_threshold > 0.0))
    throw ConfigError("completion_threshold must be positive");
  weights.validate();
  constraints.validate();
  governor.validate();
  shift_state_defaults.validate();
}

ReferenceOrbit ScenarioConfig::reference() const {
  return ReferenceOrbit(elements, GravityModel(mu));
}

StateVector ScenarioConfig::nominal_deputy() const {
  return reference().state_at(0.0) + StateVector::from_stacked(nominal_rel_state);
}

namespace {

json vec_json(const auto& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

template <class V>
V vec_from(const json& j, const char* key, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw ConfigError(std::string(key) + " must be an array of " + std::to_string(n));
  V v;
  for (int i = 0; i < n; ++i) v(i) = j[i].get<double>();
  return v;
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json ScenarioConfig::to_json() const {
  json j;
  j["name"] = name;
  j["elements"] = {{"sma_km", elements.sma},
                   {"ecc", elements.ecc},
                   {"inc_rad", elements.inc},
                   {"raan_rad", elements.raan},
                   {"argp_rad", elements.argp},
                   {"true_anomaly_rad", elements.true_anomaly}};
  j["mu"] = mu;
  j["nominal_rel_state"] = vec_json(nominal_rel_state);
  j["control_dt"] = control_dt;
  j["integrator_dt"] = integrator_dt;
  j["sim_duration"] = sim_duration;
  j["weights"] = {{"q_diag", vec_json(Vec6(weights.q.diagonal()))},
                  {"r_diag", vec_json(Vec3(weights.r.diagonal()))}};
  j["constraints"] = {{"alpha_deg", constraints.alpha * 180.0 / M_PI},
                      {"u_max", constraints.u_max},
                      {"gamma1", constraints.gamma1},
                      {"gamma2", constraints.gamma2},
                      {"gamma3", constraints.gamma3},
                      {"los_epsilon", constraints.los_epsilon},
                      {"cone_axis", std::string(to_string(constraints.cone_axis))}};
  j["governor"] = {{"p_tsg", governor.p_tsg},
                   {"t_tsg", governor.t_tsg},
                   {"initial_lower_bound", governor.initial_lower_bound}};
  const auto& s = shift_state_defaults;
  j["shift_state"] = {{"n1", s.n1_cap},         {"n2", s.n2_cap},
                      {"epsilon", s.epsilon},    {"bisect_tol", s.bisect_tol},
                      {"bisect_max_iter", s.bisect_max_iter}};
  j["mc"] = {{"runs", mc.runs},
             {"sigma_pos", mc.sigma_pos},
             {"sigma_vel", mc.sigma_vel},
             {"rng_seed", mc.rng_seed}};
  j["completion_threshold"] = completion_threshold;
  return j;
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  ScenarioConfig c;
  try {
    if (!j.is_object()) throw ConfigError("scenario config must be a JSON object");
    read(j, "name", c.name);
    const json& el = j.at("elements");
    c.elements.sma = el.at("sma_km").get<double>();
    c.elements.ecc = el.at("ecc").get<double>();
    c.elements.inc = el.at("inc_rad").get<double>();
    c.elements.raan = el.at("raan_rad").get<double>();
    c.elements.argp = el.at("argp_rad").get<double>();
    read(el, "true_anomaly_rad", c.elements.true_anomaly);
    read(j, "mu", c.mu);
    c.elements.validate();
    if (!(c.mu > 0.0)) throw ConfigError("mu must be positive");
    const double period = orbital_period(c.elements, GravityModel(c.mu));

    c.nominal_rel_state = vec_from<Vec6>(j.at("nominal_rel_state"), "nominal_rel_state", 6);
    read(j, "control_dt", c.control_dt);
    read(j, "integrator_dt", c.integrator_dt);
    c.sim_duration = 2.0 * period;
    read(j, "sim_duration", c.sim_duration);

    if (j.contains("weights")) {
      const json& w = j["weights"];
      if (w.contains("q_diag"))
        c.weights.q = vec_from<Vec6>(w["q_diag"], "weights.q_diag", 6).asDiagonal();
      if (w.contains("r_diag"))
        c.weights.r = vec_from<Vec3>(w["r_diag"], "weights.r_diag", 3).asDiagonal();
    }
    if (j.contains("constraints")) {
      const json& k = j["constraints"];
      if (k.contains("alpha_deg")) c.constraints.alpha = k["alpha_deg"].get<double>() * M_PI / 180.0;
      read(k, "u_max", c.constraints.u_max);
      read(k, "gamma1", c.constraints.gamma1);
      read(k, "gamma2", c.constraints.gamma2);
      read(k, "gamma3", c.constraints.gamma3);
      read(k, "los_epsilon", c.constraints.los_epsilon);
      if (k.contains("cone_axis"))
        c.constraints.cone_axis = cone_axis_from_string(k["cone_axis"].get<std::string>());
    }

    c.governor.p_tsg = c.control_dt;
    c.governor.t_tsg = period;
    c.governor.initial_lower_bound = -period / 10.0;
    if (j.contains("governor")) {
      const json& g = j["governor"];
      read(g, "p_tsg", c.governor.p_tsg);
      read(g, "t_tsg", c.governor.t_tsg);
      read(g, "initial_lower_bound", c.governor.initial_lower_bound);
    }
    if (j.contains("shift_state")) {
      const json& s = j["shift_state"];
      read(s, "n1", c.shift_state_defaults.n1_cap);
      read(s, "n2", c.shift_state_defaults.n2_cap);
      read(s, "epsilon", c.shift_state_defaults.epsilon);
      read(s, "bisect_tol", c.shift_state_defaults.bisect_tol);
      read(s, "bisect_max_iter", c.shift_state_defaults.bisect_max_iter);
    }

    c.mc.sigma_pos = 0.1 * c.nominal_rel_state.head<3>().norm();
    c.mc.sigma_vel = 0.01 * c.nominal_rel_state.tail<3>().norm();
    if (j.contains("mc")) {
      const json& m = j["mc"];
      read(m, "runs", c.mc.runs);
      read(m, "sigma_pos", c.mc.sigma_pos);
      read(m, "sigma_vel", c.mc.sigma_vel);
      read(m, "rng_seed", c.mc.rng_seed);
    }
    read(j, "completion_threshold", c.completion_threshold);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  } catch (const UnsupportedOrbitError& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void ScenarioConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config: " + path.string());
  out << to_json().dump(2) << "\n";
}

ScenarioConfig preset(const std::string& name) {
  json j;
  if (name == "leo_crew3") {
    j = {{"name", name},
         {"elements", {{"sma_km", 6798.281637}, {"ecc", 0.000551}, {"inc_rad", 0.900516},
                       {"raan_rad", 5.909781}, {"argp_rad", 1.872335},
                       {"true_anomaly_rad", 2.1555}}},
         {"nominal_rel_state", {-25.9809, 27.8498, 22.7715, -0.0350, -0.0066, -0.0234}},
         {"control_dt", 10.0},
         {"integrator_dt", 1.0},
         {"constraints", {{"cone_axis", "anti_velocity"}}}};
  } else if (name == "molniya") {
    j = {{"name", name},
         {"elements", {{"sma_km", 26646.680769}, {"ecc", 0.74}, {"inc_rad", 1.096067},
                       {"raan_rad", 0.0}, {"argp_rad", 4.88692},
                       {"true_anomaly_rad", 0.0}}},
         {"nominal_rel_state", {-9.7168, -0.3110, 0.5869, 0.0014, -0.0035, -0.0068}},
         {"control_dt", 60.0},
         {"integrator_dt", 10.0},
         {"constraints", {{"cone_axis", "anti_velocity"}}}};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return ScenarioConfig::from_json(j);
}

std::vector<std::string> preset_names() { return {"leo_crew3", "molniya"}; }

ScenarioConfig resolve_config(const std::string& spec) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(spec)) return ScenarioConfig::load(spec);
  if (const char* dir = std::getenv(kConfigDirEnv)) {
    const fs::path p = fs::path(dir) / (spec + ".json");
    if (fs::is_regular_file(p)) return ScenarioConfig::load(p);
  }
  for (const auto& n : preset_names())
    if (n == spec) return preset(n);
  throw ConfigError("no config file or preset named '" + spec + "'");
}

}  // namespace ltsg
