#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ltsg/constraints.hpp"
#include "ltsg/dynamics.hpp"
#include "ltsg/lstm.hpp"

namespace ltsg {

struct GovernorConfig {
  double p_tsg = 10.0;                 // update period [s]
  double t_tsg = 5578.0;               // verification horizon [s]
  double initial_lower_bound = -557.8; // first bisection lower bound [s], < 0

  void validate() const;
};

/// Time-shift decision variable plus the hybrid scheme's counters and
/// search settings.
struct TimeShiftState {
  double t_back = 0.0;
  int k1 = 0;  // consecutive safe-but-stalled predictions
  int k2 = 0;  // consecutive unsafe predictions
  int n1_cap = 50;
  int n2_cap = 10;
  double epsilon = 1e-10;
  double bisect_tol = 1e-3;
  int bisect_max_iter = 40;

  void validate() const;
};

enum class GovernorPath { Initial, Model, Hold, Bisection, NoModel };

std::string_view to_string(GovernorPath p);
GovernorPath governor_path_from_string(std::string_view s);

/// One governor update as logged alongside the trajectory.
struct GovernorRecord {
  double t = 0.0;
  std::optional<double> predicted;
  double adopted = 0.0;
  bool safe = true;
  GovernorPath path = GovernorPath::Initial;
  double wall_s = 0.0;
  int verifications = 0;
  bool warning = false;
  std::string note;
};

/// Reference-orbit state at t + t_back.
StateVector virtual_target(const ReferenceOrbit& reference, double t,
                           double t_back);

struct BisectionResult {
  double t_back = 0.0;
  int verifications = 0;
  /// The lower bound itself failed verification; t_back == lo.
  bool lower_bound_failed = false;
};

/// Largest verified shift in [lo, 0]: checks lo, then 0, then bisects.
BisectionResult bisection_tsg(const Plant& plant, double t,
                              const StateVector& deputy, double lo,
                              const GovernorConfig& cfg,
                              const TimeShiftState& settings);

struct InitialShift {
  bool feasible = false;
  double t_back = 0.0;
  int verifications = 0;
};

/// Feasible starting shift at t0, or feasible == false.
///
/// Tries the configured lower bound first. When the far target is not itself
/// admissible, falls back to the shift whose virtual target is nearest to the
/// deputy and then to a coarse scan of [lower_bound, 0]; the first admissible
/// candidate seeds bisection_tsg toward zero.
InitialShift initial_shift(const Plant& plant, double t0,
                           const StateVector& deputy, const GovernorConfig& cfg,
                           const TimeShiftState& settings);

/// Conventional governor update: bisection on [previous shift, 0].
GovernorRecord tsg_step(TimeShiftState& state, double t,
                        const StateVector& deputy, const Plant& plant,
                        const GovernorConfig& cfg);

/// Hybrid update: model prediction clamped into [previous, 0], verified,
/// with hold-on-unsafe and the stall / failure bisection fallbacks. With no
/// admissible model for the phase (window still filling) the previous
/// verified shift is held (path NoModel).
GovernorRecord hybrid_step(TimeShiftState& state, const SlidingWindow& window,
                           double t, const StateVector& chief,
                           const StateVector& deputy,
                           const ModelRegistry& registry, const Plant& plant,
                           const GovernorConfig& cfg);

}  // namespace ltsg
