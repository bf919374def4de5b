#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltsg/constraints.hpp"
#include "ltsg/dynamics.hpp"
#include "ltsg/governor.hpp"
#include "ltsg/lqr.hpp"

namespace ltsg {

struct MonteCarloConfig {
  int runs = 20;
  double sigma_pos = 0.0;  // km, per axis
  double sigma_vel = 0.0;  // km/s, per axis
  std::uint64_t rng_seed = 1;
};

struct ScenarioConfig {
  std::string name = "custom";
  OrbitalElements elements;
  double mu = kEarthMu;
  Vec6 nominal_rel_state = Vec6::Zero();  // ECI deputy minus chief
  double control_dt = 10.0;
  double integrator_dt = 1.0;
  double sim_duration = 0.0;  // s
  LqrWeights weights = LqrWeights::defaults();
  ConstraintConfig constraints;
  GovernorConfig governor;
  TimeShiftState shift_state_defaults;
  MonteCarloConfig mc;
  double completion_threshold = 0.1;  // km

  void validate() const;
  ReferenceOrbit reference() const;
  StateVector nominal_deputy() const;

  nlohmann::json to_json() const;
  /// Missing keys take the defaults derived from the orbit (two periods,
  /// one-period horizon, tenth-period lower bound, sigma from the nominal
  /// offset).
  static ScenarioConfig from_json(const nlohmann::json& j);
  static ScenarioConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Built-in presets: "leo_crew3" and "molniya".
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Resolves a --config argument: an existing file, a preset name, or
/// <name>.json inside $LTSG_CONFIG_DIR.
ScenarioConfig resolve_config(const std::string& spec);

inline constexpr const char* kConfigDirEnv = "LTSG_CONFIG_DIR";

}  // namespace ltsg
