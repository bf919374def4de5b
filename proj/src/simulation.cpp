#include "ltsg/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "ltsg/errors.hpp"

namespace ltsg {

MissionContext::MissionContext(ScenarioConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      reference_(cfg_.reference()),
      schedule_(build_gain_schedule(reference_, cfg_.weights, cfg_.control_dt)) {}

Plant MissionContext::plant() const {
  return Plant{reference_, schedule_, cfg_.constraints, cfg_.control_dt,
               cfg_.integrator_dt};
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::Tsg: return "tsg";
    case Mode::Ltsg: return "ltsg";
    case Mode::Forced: return "forced";
  }
  return "tsg";
}

Mode mode_from_string(std::string_view s) {
  for (auto m : {Mode::Tsg, Mode::Ltsg, Mode::Forced})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown mode '" + std::string(s) + "'");
}

namespace {

int step_count(double duration, double dt) {
  return static_cast<int>(std::floor(duration / dt + 1e-9));
}

}  // namespace

TrajectoryLog run_mission(const MissionContext& ctx, const StateVector& deputy0,
                          const MissionOptions& opts) {
  if (!deputy0.finite()) throw DomainError("initial deputy state must be finite");
  const ScenarioConfig& cfg = ctx.config();
  const ReferenceOrbit& ref = ctx.reference();
  const Plant plant = ctx.plant();
  const double dt = cfg.control_dt;
  const int n = step_count(cfg.sim_duration, dt);
  const int every = std::max(1, static_cast<int>(std::lround(cfg.governor.p_tsg / dt)));

  if (opts.mode == Mode::Ltsg && (!opts.registry || opts.registry->empty()))
    throw ConfigError("ltsg mode needs a nonempty model registry");
  if (opts.mode == Mode::Forced &&
      static_cast<int>(opts.forced_shifts.size()) < n)
    throw ConfigError("forced mode needs one shift per control step");

  TrajectoryLog log;
  log.control_dt = dt;
  log.rows.reserve(n);
  TimeShiftState shift = cfg.shift_state_defaults;
  SlidingWindow window(opts.registry ? std::max<std::size_t>(1, opts.registry->max_window()) : 1);

  StateVector deputy = deputy0;
  double t = 0.0;
  try {
    for (int k = 0; k < n; ++k) {
      t = k * dt;
      const StateVector chief = ref.state_at(t);
      window.push(t, chief, deputy);

      std::optional<GovernorRecord> rec;
      if (opts.mode == Mode::Forced) {
        shift.t_back = opts.forced_shifts[k];
      } else if (k == 0) {
        const auto start = std::chrono::steady_clock::now();
        const InitialShift init = initial_shift(plant, t, deputy, cfg.governor, shift);
        GovernorRecord r;
        r.t = t;
        r.path = GovernorPath::Initial;
        r.adopted = init.t_back;
        r.safe = init.feasible;
        r.verifications = init.verifications;
        r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!init.feasible) {
          r.warning = true;
          r.note = "no admissible initial shift";
          log.initial_feasible = false;
        }
        shift.t_back = init.t_back;
        rec = r;
      } else if (k % every == 0) {
        if (opts.mode == Mode::Tsg)
          rec = tsg_step(shift, t, deputy, plant, cfg.governor);
        else
          rec = hybrid_step(shift, window, t, chief, deputy, *opts.registry, plant,
                            cfg.governor);
      }

      const ClosedLoopStep step = closed_loop_step(plant, t, deputy, shift.t_back);
      LogRow row;
      row.t = t;
      row.chief = chief;
      row.deputy = deputy;
      row.target = step.virtual_target;
      row.u = step.u;
      row.t_back = shift.t_back;
      row.report = evaluate_constraints(chief, deputy, step.u, cfg.constraints);
      row.governor = std::move(rec);
      log.rows.push_back(std::move(row));
      deputy = step.next_deputy;
    }
    t = n * dt;
  } catch (const Error& e) {
    log.aborted = true;
    log.error = e.what();
  }
  log.final_t = t;
  log.final_chief = ref.state_at(t);
  log.final_deputy = deputy;
  return log;
}

Metrics compute_metrics(const TrajectoryLog& log, double completion_threshold) {
  Metrics m;
  double total_wall = 0.0;
  for (const LogRow& r : log.rows) {
    m.delta_v += r.u.norm() * log.control_dt;
    if (!r.report.satisfied) ++m.constraint_violations;
    if (r.governor && r.governor->path != GovernorPath::Initial) {
      ++m.governor_updates;
      total_wall += r.governor->wall_s;
      m.worst_update_time = std::max(m.worst_update_time, r.governor->wall_s);
    }
  }
  if (m.governor_updates > 0) m.avg_update_time = total_wall / m.governor_updates;
  m.final_rel_distance = (log.final_deputy.pos - log.final_chief.pos).norm();
  m.final_t_back = log.rows.empty() ? 0.0 : log.rows.back().t_back;
  m.aborted = log.aborted;
  m.completed = !log.aborted && m.final_rel_distance < completion_threshold &&
                m.final_t_back == 0.0;
  return m;
}

StateVector draw_perturbed(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vec6 rel = cfg.nominal_rel_state;
  for (int i = 0; i < 3; ++i) rel(i) += cfg.mc.sigma_pos * n01(rng);
  for (int i = 3; i < 6; ++i) rel(i) += cfg.mc.sigma_vel * n01(rng);
  return cfg.reference().state_at(0.0) + StateVector::from_stacked(rel);
}

bool initial_state_feasible(const MissionContext& ctx, const StateVector& deputy0) {
  const ScenarioConfig& cfg = ctx.config();
  try {
    const StateVector chief = ctx.reference().state_at(0.0);
    if (los_constraint(chief, deputy0, cfg.constraints) > 0.0) return false;
    const auto h3 = soft_docking_constraint(chief, deputy0, cfg.constraints);
    if (h3 && *h3 > 0.0) return false;
    return initial_shift(ctx.plant(), 0.0, deputy0, cfg.governor,
                         cfg.shift_state_defaults)
        .feasible;
  } catch (const Error&) {
    return false;
  }
}

namespace {

// Calls fn(i) for i in [0, count) on up to `jobs` threads.
template <class Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
  jobs = std::clamp(jobs, 1, std::max(1, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

SampleResult sample_initial_states(const MissionContext& ctx, int jobs) {
  const ScenarioConfig& cfg = ctx.config();
  const int runs = cfg.mc.runs;
  std::mt19937_64 rng(cfg.mc.rng_seed);
  SampleResult out;
  const int batch = std::max(runs, jobs);
  while (static_cast<int>(out.states.size()) < runs) {
    std::vector<StateVector> draws(batch);
    for (auto& d : draws) d = draw_perturbed(cfg, rng);
    std::vector<char> ok(batch, 0);
    parallel_for(batch, jobs, [&](int i) { ok[i] = initial_state_feasible(ctx, draws[i]); });
    for (int i = 0; i < batch && static_cast<int>(out.states.size()) < runs; ++i) {
      ++out.draws;
      if (ok[i]) out.states.push_back(draws[i]);
    }
    if (static_cast<int>(out.states.size()) < runs && out.draws >= 10 * runs &&
        out.states.size() < 0.01 * out.draws)
      throw ConfigError("initial-state retention below 1% after " +
                        std::to_string(out.draws) + " draws");
  }
  return out;
}

int CampaignSummary::completed() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) {
    return !r.failed && r.metrics.completed;
  }));
}

int CampaignSummary::failed() const {
  return static_cast<int>(
      std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.failed; }));
}

int CampaignSummary::total_violations() const {
  int n = 0;
  for (const auto& r : runs) n += r.metrics.constraint_violations;
  return n;
}

int CampaignSummary::runs_with_violations() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) {
    return r.metrics.constraint_violations > 0;
  }));
}

double CampaignSummary::mean_delta_v() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.metrics.delta_v;
  return s / runs.size();
}

double CampaignSummary::max_delta_v() const {
  double m = 0.0;
  for (const auto& r : runs) m = std::max(m, r.metrics.delta_v);
  return m;
}

double CampaignSummary::mean_avg_update_time() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.metrics.avg_update_time;
  return s / runs.size();
}

double CampaignSummary::worst_update_time() const {
  double m = 0.0;
  for (const auto& r : runs) m = std::max(m, r.metrics.worst_update_time);
  return m;
}

CampaignSummary monte_carlo(const MissionContext& ctx, const MissionOptions& opts,
                            int jobs, bool keep_logs) {
  const SampleResult samples = sample_initial_states(ctx, jobs);
  CampaignSummary summary;
  summary.scenario = ctx.config().name;
  summary.mode = opts.mode;
  summary.seed = ctx.config().mc.rng_seed;
  summary.draws = samples.draws;
  summary.runs.resize(samples.states.size());
  parallel_for(static_cast<int>(samples.states.size()), jobs, [&](int i) {
    RunResult& r = summary.runs[i];
    r.index = i;
    r.deputy0 = samples.states[i];
    try {
      TrajectoryLog log = run_mission(ctx, r.deputy0, opts);
      r.metrics = compute_metrics(log, ctx.config().completion_threshold);
      if (log.aborted) {
        r.failed = true;
        r.error = log.error;
      }
      if (keep_logs) r.log = std::move(log);
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
  });
  return summary;
}

}  // namespace ltsg
