#include "ltsg/governor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include "ltsg/errors.hpp"

namespace ltsg {

void GovernorConfig::validate() const {
  if (!(p_tsg > 0.0)) throw ConfigError("governor update period must be positive");
  if (!(t_tsg > 0.0)) throw ConfigError("governor horizon must be positive");
  if (!(initial_lower_bound < 0.0))
    throw ConfigError("initial lower bound must be negative");
}

void TimeShiftState::validate() const {
  if (t_back > 0.0) throw ConfigError("t_back must be nonpositive");
  if (k1 < 0 || k2 < 0) throw ConfigError("governor counters must be nonnegative");
  if (n1_cap < 1 || n2_cap < 1) throw ConfigError("N1 and N2 must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("stall threshold must be positive");
  if (!(bisect_tol > 0.0)) throw ConfigError("bisection tolerance must be positive");
  if (bisect_max_iter < 1) throw ConfigError("bisection iteration cap must be >= 1");
}

std::string_view to_string(GovernorPath p) {
  switch (p) {
    case GovernorPath::Initial: return "initial";
    case GovernorPath::Model: return "model";
    case GovernorPath::Hold: return "hold";
    case GovernorPath::Bisection: return "bisection";
    case GovernorPath::NoModel: return "no_model";
  }
  return "initial";
}

GovernorPath governor_path_from_string(std::string_view s) {
  for (auto p : {GovernorPath::Initial, GovernorPath::Model, GovernorPath::Hold,
                 GovernorPath::Bisection, GovernorPath::NoModel})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown governor path '" + std::string(s) + "'");
}

StateVector virtual_target(const ReferenceOrbit& reference, double t,
                           double t_back) {
  if (t_back > 0.0) throw DomainError("time shift must be nonpositive");
  return reference.state_at(t + t_back);
}

BisectionResult bisection_tsg(const Plant& plant, double t,
                              const StateVector& deputy, double lo,
                              const GovernorConfig& cfg,
                              const TimeShiftState& settings) {
  if (lo > 0.0) throw DomainError("bisection lower bound must be nonpositive");
  BisectionResult res;
  auto feasible = [&](double shift) {
    ++res.verifications;
    return verify_shift(plant, t, deputy, shift, cfg.t_tsg).safe;
  };

  if (!feasible(lo)) {
    res.t_back = lo;
    res.lower_bound_failed = true;
    return res;
  }
  if (lo == 0.0 || feasible(0.0)) {
    res.t_back = 0.0;
    return res;
  }
  double good = lo;
  double bad = 0.0;
  for (int it = 0; it < settings.bisect_max_iter && bad - good >= settings.bisect_tol;
       ++it) {
    const double mid = 0.5 * (good + bad);
    if (feasible(mid))
      good = mid;
    else
      bad = mid;
  }
  res.t_back = good;
  return res;
}

namespace {

// Shift in [lo, 0] whose reference-orbit point is closest to the deputy.
double nearest_shift(const ReferenceOrbit& ref, double t0, const Vec3& pos,
                     double lo) {
  constexpr int kSamples = 2000;
  auto dist = [&](double s) { return (ref.state_at(t0 + s).pos - pos).norm(); };
  double best = 0.0;
  double best_d = dist(0.0);
  const double h = -lo / kSamples;
  for (int i = 1; i <= kSamples; ++i) {
    const double s = -h * i;
    const double d = dist(s);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  // Golden-section refinement inside the winning cell.
  double a = std::max(lo, best - h);
  double b = std::min(0.0, best + h);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  for (int i = 0; i < 80 && b - a > 1e-9; ++i) {
    if (dist(c) < dist(d))
      b = d;
    else
      a = c;
    c = b - g * (b - a);
    d = a + g * (b - a);
  }
  return std::min(0.0, 0.5 * (a + b));
}

}  // namespace

InitialShift initial_shift(const Plant& plant, double t0,
                           const StateVector& deputy, const GovernorConfig& cfg,
                           const TimeShiftState& settings) {
  InitialShift out;
  const double lo = cfg.initial_lower_bound;

  std::vector<double> candidates{lo};
  const double near = nearest_shift(plant.reference, t0, deputy.pos, lo);
  candidates.push_back(near);
  constexpr int kScan = 32;
  for (int i = 1; i < kScan; ++i) {
    // Sweep outward from the nearest shift so close targets are tried first.
    const double step = -lo / kScan;
    for (double s : {near - step * i, near + step * i})
      if (s >= lo && s <= 0.0) candidates.push_back(s);
  }

  for (double c : candidates) {
    const BisectionResult b = bisection_tsg(plant, t0, deputy, c, cfg, settings);
    out.verifications += b.verifications;
    if (!b.lower_bound_failed) {
      out.feasible = true;
      out.t_back = b.t_back;
      return out;
    }
  }
  out.t_back = lo;
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void adopt_bisection(TimeShiftState& state, GovernorRecord& rec,
                     const BisectionResult& b) {
  rec.path = GovernorPath::Bisection;
  rec.verifications += b.verifications;
  rec.adopted = b.t_back;
  if (b.lower_bound_failed) {
    rec.warning = true;
    rec.note = "previous shift failed re-verification; retained";
  }
  state.t_back = b.t_back;
}

}  // namespace

GovernorRecord tsg_step(TimeShiftState& state, double t,
                        const StateVector& deputy, const Plant& plant,
                        const GovernorConfig& cfg) {
  const auto start = Clock::now();
  GovernorRecord rec;
  rec.t = t;
  const BisectionResult b =
      bisection_tsg(plant, t, deputy, state.t_back, cfg, state);
  adopt_bisection(state, rec, b);
  rec.safe = !b.lower_bound_failed;
  rec.wall_s = seconds_since(start);
  return rec;
}

GovernorRecord hybrid_step(TimeShiftState& state, const SlidingWindow& window,
                           double t, const StateVector& chief,
                           const StateVector& deputy,
                           const ModelRegistry& registry, const Plant& plant,
                           const GovernorConfig& cfg) {
  const auto start = Clock::now();
  GovernorRecord rec;
  rec.t = t;
  const double previous = state.t_back;
  const double rel_distance = (deputy.pos - chief.pos).norm();

  const std::optional<double> raw = predict_shift(registry, window, rel_distance);
  if (!raw) {
    // Window not filled yet for the current phase: hold the verified shift.
    rec.path = GovernorPath::NoModel;
    rec.adopted = previous;
    rec.note = "no admissible model for phase";
    rec.wall_s = seconds_since(start);
    return rec;
  }
  rec.predicted = *raw;
  const double candidate = std::clamp(*raw, previous, 0.0);

  ++rec.verifications;
  rec.safe = verify_shift(plant, t, deputy, candidate, cfg.t_tsg).safe;

  if (rec.safe) {
    state.k2 = 0;
    if (std::abs(candidate - previous) < state.epsilon) {
      if (++state.k1 >= state.n1_cap) {
        state.k1 = 0;
        adopt_bisection(state, rec,
                        bisection_tsg(plant, t, deputy, previous, cfg, state));
      } else {
        rec.path = GovernorPath::Model;
        rec.adopted = candidate;
        state.t_back = candidate;
      }
    } else {
      state.k1 = 0;
      rec.path = GovernorPath::Model;
      rec.adopted = candidate;
      state.t_back = candidate;
    }
  } else {
    if (++state.k2 >= state.n2_cap) {
      state.k2 = 0;
      adopt_bisection(state, rec,
                      bisection_tsg(plant, t, deputy, previous, cfg, state));
    } else {
      rec.path = GovernorPath::Hold;
      rec.adopted = previous;
    }
  }
  rec.wall_s = seconds_since(start);
  return rec;
}

}  // namespace ltsg
