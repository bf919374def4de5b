#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ltsg/dynamics.hpp"
#include "ltsg/lqr.hpp"

namespace ltsg {

/// Direction of the line-of-sight cone axis relative to the chief velocity.
///  - Velocity:     h1 = -v·p/(|v||p|) + cos(alpha)   (deputy ahead of chief)
///  - AntiVelocity: h1 = +v·p/(|v||p|) + cos(alpha)   (deputy trailing chief)
enum class ConeAxis { Velocity, AntiVelocity };

struct ConstraintConfig {
  double alpha = 20.0 * 3.14159265358979323846 / 180.0;  // LoS half-cone [rad]
  double u_max = 5.0e-4;      // km/s^2
  double gamma1 = 5.0;        // km, soft docking activation radius
  double gamma2 = 20.0;       // 1/s
  double gamma3 = 1.0e-3;     // km/s
  double los_epsilon = 1.0e-3;  // km
  ConeAxis cone_axis = ConeAxis::Velocity;

  void validate() const;
};

enum class ConstraintId { None, LineOfSight, Thrust, SoftDocking };

std::string_view to_string(ConstraintId id);
std::string_view to_string(ConeAxis axis);
ConeAxis cone_axis_from_string(std::string_view s);

struct ConstraintReport {
  double h1 = 0.0;
  double h2 = 0.0;
  std::optional<double> h3;  // empty when inactive (|p| > gamma1)
  bool satisfied = true;
  ConstraintId worst = ConstraintId::None;
};

double los_constraint(const StateVector& chief, const StateVector& deputy,
                      const ConstraintConfig& cfg);
double thrust_constraint(const Vec3& u, const ConstraintConfig& cfg);
std::optional<double> soft_docking_constraint(const StateVector& chief,
                                              const StateVector& deputy,
                                              const ConstraintConfig& cfg);
ConstraintReport evaluate_constraints(const StateVector& chief,
                                      const StateVector& deputy, const Vec3& u,
                                      const ConstraintConfig& cfg);

/// Everything needed to simulate the closed loop chief/deputy/virtual target.
struct Plant {
  const ReferenceOrbit& reference;
  const GainSchedule& schedule;
  const ConstraintConfig& constraints;
  double control_dt;
  double integrator_dt;
};

struct ClosedLoopStep {
  StateVector virtual_target;
  Vec3 u = Vec3::Zero();
  StateVector next_deputy;
};

/// One control period of the saturated LQ loop tracking the reference orbit
/// shifted by t_back. Shared by the simulator and the verification so that a
/// verified prediction is the trajectory the simulator will produce.
ClosedLoopStep closed_loop_step(const Plant& plant, double t,
                                const StateVector& deputy, double t_back);

struct VerificationResult {
  bool safe = true;
  double violation_time = 0.0;
  ConstraintId violated = ConstraintId::None;
  int samples = 0;
  std::string cause;  // set when the prediction itself failed

  explicit operator bool() const { return safe; }
};

/// Predicts the closed loop over [t, t + horizon] holding t_back and samples
/// h1/h3 at every control step (t included). h2 holds by saturation.
VerificationResult verify_shift(const Plant& plant, double t,
                                const StateVector& deputy, double t_back,
                                double horizon);

}  // namespace ltsg
