#include "ltsg/constraints.hpp"

#include <cmath>
#include <numbers>

#include "ltsg/errors.hpp"

namespace ltsg {

void ConstraintConfig::validate() const {
  if (!(alpha > 0.0 && alpha < std::numbers::pi / 2.0))
    throw ConfigError("LoS half-cone angle must lie in (0, pi/2)");
  if (!(u_max > 0.0)) throw ConfigError("u_max must be positive");
  if (!(gamma1 >= 0.0 && gamma2 >= 0.0 && gamma3 >= 0.0))
    throw ConfigError("soft docking parameters must be nonnegative");
  if (!(los_epsilon > 0.0)) throw ConfigError("los_epsilon must be positive");
}

std::string_view to_string(ConstraintId id) {
  switch (id) {
    case ConstraintId::None: return "none";
    case ConstraintId::LineOfSight: return "h1";
    case ConstraintId::Thrust: return "h2";
    case ConstraintId::SoftDocking: return "h3";
  }
  return "none";
}

std::string_view to_string(ConeAxis axis) {
  return axis == ConeAxis::Velocity ? "velocity" : "anti_velocity";
}

ConeAxis cone_axis_from_string(std::string_view s) {
  if (s == "velocity") return ConeAxis::Velocity;
  if (s == "anti_velocity") return ConeAxis::AntiVelocity;
  throw ConfigError("unknown cone axis '" + std::string(s) + "'");
}

double los_constraint(const StateVector& chief, const StateVector& deputy,
                      const ConstraintConfig& cfg) {
  const double vn = chief.vel.norm();
  if (!(vn > 0.0)) throw DomainError("LoS constraint needs nonzero chief velocity");
  const Vec3 rel = deputy.pos - chief.pos;
  const double pn = rel.norm();
  const double cos_a = std::cos(cfg.alpha);
  // Coincident spacecraft sit at the apex of the cone: satisfied.
  if (pn < cfg.los_epsilon) return cos_a - 1.0;
  const double c = chief.vel.dot(rel) / (vn * pn);
  return (cfg.cone_axis == ConeAxis::Velocity ? -c : c) + cos_a;
}

double thrust_constraint(const Vec3& u, const ConstraintConfig& cfg) {
  return u.norm() - cfg.u_max;
}

std::optional<double> soft_docking_constraint(const StateVector& chief,
                                              const StateVector& deputy,
                                              const ConstraintConfig& cfg) {
  const StateVector rel = deputy - chief;
  const double pn = rel.pos.norm();
  if (!(pn <= cfg.gamma1)) return std::nullopt;
  return rel.vel.norm() - cfg.gamma2 * pn - cfg.gamma3;
}

ConstraintReport evaluate_constraints(const StateVector& chief,
                                      const StateVector& deputy, const Vec3& u,
                                      const ConstraintConfig& cfg) {
  ConstraintReport r;
  r.h1 = los_constraint(chief, deputy, cfg);
  r.h2 = thrust_constraint(u, cfg);
  r.h3 = soft_docking_constraint(chief, deputy, cfg);

  double worst = r.h1;
  r.worst = ConstraintId::LineOfSight;
  if (r.h2 > worst) {
    worst = r.h2;
    r.worst = ConstraintId::Thrust;
  }
  if (r.h3 && *r.h3 > worst) {
    worst = *r.h3;
    r.worst = ConstraintId::SoftDocking;
  }
  r.satisfied = worst <= 0.0;
  if (r.satisfied) r.worst = ConstraintId::None;
  return r;
}

ClosedLoopStep closed_loop_step(const Plant& plant, double t,
                                const StateVector& deputy, double t_back) {
  ClosedLoopStep s;
  const double target_time = t + t_back;
  s.virtual_target = plant.reference.state_at(target_time);
  s.u = control_law(plant.schedule, target_time, deputy, s.virtual_target,
                    plant.constraints.u_max);
  s.next_deputy = propagate(deputy, s.u, t, t + plant.control_dt,
                            plant.integrator_dt, plant.reference.gravity());
  return s;
}

VerificationResult verify_shift(const Plant& plant, double t,
                                const StateVector& deputy, double t_back,
                                double horizon) {
  if (!(horizon > 0.0)) throw DomainError("verification horizon must be positive");
  if (t_back > 0.0) throw DomainError("time shift must be nonpositive");

  VerificationResult res;
  const auto steps =
      static_cast<long>(std::ceil(horizon / plant.control_dt - 1e-9));
  StateVector x = deputy;
  try {
    for (long k = 0;; ++k) {
      const double tk = t + static_cast<double>(k) * plant.control_dt;
      const StateVector chief = plant.reference.state_at(tk);
      ++res.samples;
      if (los_constraint(chief, x, plant.constraints) > 0.0) {
        res.safe = false;
        res.violation_time = tk;
        res.violated = ConstraintId::LineOfSight;
        return res;
      }
      const auto h3 = soft_docking_constraint(chief, x, plant.constraints);
      if (h3 && *h3 > 0.0) {
        res.safe = false;
        res.violation_time = tk;
        res.violated = ConstraintId::SoftDocking;
        return res;
      }
      if (k == steps) break;
      x = closed_loop_step(plant, tk, x, t_back).next_deputy;
    }
  } catch (const Error& e) {
    res.safe = false;
    res.cause = e.what();
  }
  return res;
}

}  // namespace ltsg
