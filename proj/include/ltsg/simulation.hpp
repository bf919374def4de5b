#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ltsg/constraints.hpp"
#include "ltsg/governor.hpp"
#include "ltsg/lqr.hpp"
#include "ltsg/lstm.hpp"
#include "ltsg/scenario.hpp"

namespace ltsg {

/// Immutable per-scenario data shared by every run: the config, the chief's
/// orbit and the periodic gain schedule built at control_dt.
class MissionContext {
 public:
  explicit MissionContext(ScenarioConfig cfg);

  const ScenarioConfig& config() const noexcept { return cfg_; }
  const ReferenceOrbit& reference() const noexcept { return reference_; }
  const GainSchedule& schedule() const noexcept { return schedule_; }
  Plant plant() const;

 private:
  ScenarioConfig cfg_;
  ReferenceOrbit reference_;
  GainSchedule schedule_;
};

enum class Mode { Tsg, Ltsg, Forced };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

struct MissionOptions {
  Mode mode = Mode::Tsg;
  const ModelRegistry* registry = nullptr;  // required for Ltsg
  std::vector<double> forced_shifts;        // one per step for Forced
};

struct LogRow {
  double t = 0.0;
  StateVector chief;
  StateVector deputy;
  StateVector target;
  Vec3 u = Vec3::Zero();
  double t_back = 0.0;
  ConstraintReport report;
  /// Present on steps where the governor ran (or the initial search).
  std::optional<GovernorRecord> governor;
};

struct TrajectoryLog {
  double control_dt = 0.0;
  std::vector<LogRow> rows;  // steps k = 0..N-1
  double final_t = 0.0;
  StateVector final_chief;   // state at final_t, after the last step
  StateVector final_deputy;
  bool initial_feasible = true;
  bool aborted = false;
  std::string error;
};

struct Metrics {
  double delta_v = 0.0;            // km/s
  double avg_update_time = 0.0;    // s
  double worst_update_time = 0.0;  // s
  int governor_updates = 0;
  double final_rel_distance = 0.0;  // km
  double final_t_back = 0.0;
  int constraint_violations = 0;
  bool completed = false;
  bool aborted = false;
};

/// Closed-loop mission from deputy0 at t = 0 for config().sim_duration.
/// Integration or verification failures end the run with a partial log
/// (aborted = true).
TrajectoryLog run_mission(const MissionContext& ctx, const StateVector& deputy0,
                          const MissionOptions& opts);

/// Timing stats cover governor updates after the initial shift search.
Metrics compute_metrics(const TrajectoryLog& log, double completion_threshold);

/// chief0 + nominal offset + N(0, sigma^2 I) on position and velocity.
StateVector draw_perturbed(const ScenarioConfig& cfg, std::mt19937_64& rng);

/// Feasibility filter: h1 (and h3 if active) hold at t0 and initial_shift
/// finds an admissible shift.
bool initial_state_feasible(const MissionContext& ctx, const StateVector& deputy0);

struct SampleResult {
  std::vector<StateVector> states;
  int draws = 0;
};

/// Draws until cfg.mc.runs states pass the filter. Draw order and retention
/// are independent of `jobs`. Throws ConfigError when the retention rate is
/// below 1% after at least 10 * runs draws.
SampleResult sample_initial_states(const MissionContext& ctx, int jobs = 1);

struct RunResult {
  int index = 0;
  StateVector deputy0;
  Metrics metrics;
  bool failed = false;
  std::string error;
  TrajectoryLog log;
};

struct CampaignSummary {
  std::string scenario;
  Mode mode = Mode::Tsg;
  std::uint64_t seed = 0;
  int draws = 0;
  std::vector<RunResult> runs;

  int completed() const;
  int failed() const;
  int total_violations() const;
  int runs_with_violations() const;
  double mean_delta_v() const;
  double max_delta_v() const;
  double mean_avg_update_time() const;
  double worst_update_time() const;
};

/// Runs one mission per retained sample on `jobs` worker threads.
CampaignSummary monte_carlo(const MissionContext& ctx, const MissionOptions& opts,
                            int jobs = 1, bool keep_logs = false);

}  // namespace ltsg
