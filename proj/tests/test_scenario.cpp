#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ltsg/errors.hpp"
#include "ltsg/scenario.hpp"

using namespace ltsg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "ltsg_test_scenario";
  fs::create_directories(d);
  return d;
}

nlohmann::json minimal() {
  return {{"elements", {{"sma_km", 7000.0}, {"ecc", 0.001}, {"inc_rad", 0.5},
                        {"raan_rad", 0.1}, {"argp_rad", 0.2}}},
          {"nominal_rel_state", {-3.0, 4.0, 0.0, 0.0, -0.003, 0.004}}};
}

}  // namespace

TEST_CASE("leo preset") {
  const ScenarioConfig c = preset("leo_crew3");
  CHECK(c.name == "leo_crew3");
  CHECK(c.elements.sma == 6798.281637);
  CHECK(c.elements.ecc == 0.000551);
  CHECK(c.nominal_rel_state(0) == -25.9809);
  CHECK(c.nominal_rel_state(5) == -0.0234);
  CHECK(c.control_dt == 10.0);
  CHECK(c.integrator_dt == 1.0);
  CHECK(c.constraints.cone_axis == ConeAxis::AntiVelocity);
  const double period = c.reference().period();
  CHECK(period / 60.0 == doctest::Approx(92.97).epsilon(0.01 / 92.97));
  CHECK(c.sim_duration == doctest::Approx(2.0 * period));
  CHECK(c.governor.t_tsg == doctest::Approx(period));
  CHECK(c.governor.initial_lower_bound == doctest::Approx(-period / 10.0));
  CHECK(c.governor.p_tsg == c.control_dt);
  CHECK(c.mc.sigma_pos == doctest::Approx(0.1 * c.nominal_rel_state.head<3>().norm()));
  CHECK(c.mc.sigma_vel == doctest::Approx(0.01 * c.nominal_rel_state.tail<3>().norm()));
  CHECK(c.completion_threshold == 0.1);
  CHECK(c.weights.q.diagonal()(0) == 10.0);
  CHECK(c.weights.q.diagonal()(3) == 1.0);
  CHECK(c.weights.r == Mat3::Identity());
  CHECK(c.constraints.u_max == 5e-4);

  const StateVector d = c.nominal_deputy();
  const StateVector ch = c.reference().state_at(0.0);
  CHECK((d - ch).stacked().isApprox(c.nominal_rel_state, 1e-12));
}

TEST_CASE("molniya preset") {
  const ScenarioConfig c = preset("molniya");
  CHECK(c.elements.ecc == 0.74);
  CHECK(c.control_dt == 60.0);
  CHECK(c.integrator_dt == 10.0);
  CHECK(c.reference().period() / 60.0 == doctest::Approx(721.48).epsilon(0.05 / 721.48));
  CHECK(c.nominal_rel_state(0) == -9.7168);
  CHECK(c.nominal_rel_state(4) == -0.0035);
  CHECK_THROWS_AS(preset("geo"), ConfigError);
  CHECK(preset_names().size() == 2);
}

TEST_CASE("json round trip") {
  for (const auto& n : preset_names()) {
    const ScenarioConfig c = preset(n);
    const fs::path p = scratch_dir() / (n + ".json");
    c.save(p);
    const ScenarioConfig back = ScenarioConfig::load(p);
    CHECK(back.to_json() == c.to_json());
    CHECK(back.sim_duration == c.sim_duration);
    CHECK(back.governor.t_tsg == c.governor.t_tsg);
    CHECK(back.mc.sigma_vel == c.mc.sigma_vel);
    CHECK(back.nominal_rel_state == c.nominal_rel_state);
  }
}

TEST_CASE("shipped config files equal the presets") {
  for (const auto& n : preset_names()) {
    const fs::path p = fs::path(LTSG_SOURCE_DIR) / "configs" / (n + ".json");
    REQUIRE(fs::exists(p));
    CHECK(ScenarioConfig::load(p).to_json() == preset(n).to_json());
  }
}

TEST_CASE("derived defaults and overrides") {
  auto j = minimal();
  ScenarioConfig c = ScenarioConfig::from_json(j);
  const double period = 2.0 * M_PI * std::sqrt(std::pow(7000.0, 3) / kEarthMu);
  CHECK(c.sim_duration == doctest::Approx(2.0 * period).epsilon(1e-12));
  CHECK(c.mc.sigma_pos == doctest::Approx(0.5));
  CHECK(c.mc.sigma_vel == doctest::Approx(5e-5));
  CHECK(c.elements.true_anomaly == 0.0);
  CHECK(c.constraints.cone_axis == ConeAxis::Velocity);

  j["sim_duration"] = 100.0;
  j["governor"] = {{"p_tsg", 30.0}};
  j["mc"] = {{"runs", 3}, {"rng_seed", 99}};
  j["constraints"] = {{"alpha_deg", 30.0}, {"cone_axis", "anti_velocity"}};
  j["shift_state"] = {{"n1", 7}, {"n2", 2}};
  j["weights"] = {{"r_diag", {2.0, 2.0, 2.0}}};
  c = ScenarioConfig::from_json(j);
  CHECK(c.sim_duration == 100.0);
  CHECK(c.governor.p_tsg == 30.0);
  CHECK(c.governor.t_tsg == doctest::Approx(period));
  CHECK(c.mc.runs == 3);
  CHECK(c.mc.rng_seed == 99);
  CHECK(c.mc.sigma_pos == doctest::Approx(0.5));
  CHECK(c.constraints.alpha == doctest::Approx(M_PI / 6.0));
  CHECK(c.shift_state_defaults.n1_cap == 7);
  CHECK(c.shift_state_defaults.n2_cap == 2);
  CHECK(c.weights.r(1, 1) == 2.0);
}

TEST_CASE("invalid configs") {
  auto expect_bad = [](nlohmann::json j) {
    CHECK_THROWS_AS(ScenarioConfig::from_json(j), ConfigError);
  };
  auto j = minimal();
  j["elements"]["ecc"] = 1.2;
  expect_bad(j);
  j = minimal();
  j["elements"].erase("sma_km");
  expect_bad(j);
  j = minimal();
  j["nominal_rel_state"] = {1.0, 2.0};
  expect_bad(j);
  j = minimal();
  j["control_dt"] = 0.5;
  expect_bad(j);
  j = minimal();
  j["constraints"] = {{"alpha_deg", 95.0}};
  expect_bad(j);
  j = minimal();
  j["constraints"] = {{"cone_axis", "sideways"}};
  expect_bad(j);
  j = minimal();
  j["mc"] = {{"runs", 0}};
  expect_bad(j);
  j = minimal();
  j["weights"] = {{"q_diag", {1, 1, 1, 1, 1, -1}}};
  expect_bad(j);
  j = minimal();
  j["governor"] = {{"initial_lower_bound", 5.0}};
  expect_bad(j);
  j = minimal();
  j["mu"] = -1.0;
  expect_bad(j);
  j = minimal();
  j["control_dt"] = "ten";
  expect_bad(j);
  expect_bad(nlohmann::json::array());

  const fs::path p = scratch_dir() / "broken.json";
  {
    std::ofstream out(p);
    out << "{\"elements\": ";
  }
  CHECK_THROWS_AS(ScenarioConfig::load(p), ConfigError);
  CHECK_THROWS_AS(ScenarioConfig::load(scratch_dir() / "absent.json"), ConfigError);

  ScenarioConfig c = preset("leo_crew3");
  c.integrator_dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("resolve_config") {
  CHECK(resolve_config("molniya").name == "molniya");

  const fs::path file = scratch_dir() / "custom_file.json";
  auto j = minimal();
  j["name"] = "from_file";
  {
    std::ofstream out(file);
    out << j.dump();
  }
  CHECK(resolve_config(file.string()).name == "from_file");

  const fs::path dir = scratch_dir() / "env";
  fs::create_directories(dir);
  j["name"] = "from_env";
  {
    std::ofstream out(dir / "leo_crew3.json");
    out << j.dump();
  }
  ::setenv(kConfigDirEnv, dir.string().c_str(), 1);
  CHECK(resolve_config("leo_crew3").name == "from_env");
  CHECK(resolve_config("molniya").name == "molniya");
  ::unsetenv(kConfigDirEnv);
  CHECK(resolve_config("leo_crew3").name == "leo_crew3");
  CHECK_THROWS_AS(resolve_config("nonexistent_scenario"), ConfigError);
}
