#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ltsg/constraints.hpp"
#include "ltsg/errors.hpp"
#include "ltsg/lqr.hpp"

using namespace ltsg;

namespace {

const double kAlpha = 20.0 * std::numbers::pi / 180.0;

StateVector chief_at_origin() { return {Vec3(7000, 0, 0), Vec3(0, 7.5, 0)}; }

StateVector offset(const StateVector& c, const Vec3& dp, const Vec3& dv = Vec3::Zero()) {
  return {c.pos + dp, c.vel + dv};
}

struct LeoFixture {
  GravityModel earth;
  ReferenceOrbit ref{OrbitalElements{6798.281637, 0.000551, 0.900516, 5.909781,
                                     1.872335, 2.1555},
                     earth};
  GainSchedule schedule = build_gain_schedule(ref, LqrWeights::defaults(), 10.0);
  ConstraintConfig cc = [] {
    ConstraintConfig c;
    c.cone_axis = ConeAxis::AntiVelocity;
    return c;
  }();
  Plant plant{ref, schedule, cc, 10.0, 1.0};
  Vec3 nominal_dp{-25.9809, 27.8498, 22.7715};
  Vec3 nominal_dv{-0.0350, -0.0066, -0.0234};
};

const LeoFixture& leo() {
  static const LeoFixture f;
  return f;
}

// Independent closed-loop simulator with an exhaustive constraint scan.
struct NaiveOutcome {
  bool safe = true;
  double first_violation = 0.0;
  int violations = 0;
};

Vec6 naive_rhs(const Vec6& x, const Vec3& u, double mu) {
  const Vec3 p = x.head<3>();
  const double r = std::sqrt(p.x() * p.x() + p.y() * p.y() + p.z() * p.z());
  Vec6 d;
  d.head<3>() = x.tail<3>();
  d.tail<3>() = -mu / (r * r * r) * p + u;
  return d;
}

NaiveOutcome naive_verify(const LeoFixture& f, double t, const StateVector& deputy,
                          double t_back, double horizon) {
  NaiveOutcome out;
  const double dt = f.plant.control_dt;
  const int steps = static_cast<int>(std::ceil(horizon / dt - 1e-9));
  Vec6 x = deputy.stacked();
  for (int k = 0; k <= steps; ++k) {
    const double tk = t + k * dt;
    const StateVector c = f.ref.state_at(tk);
    const Vec3 rel = x.head<3>() - c.pos;
    const double cosang = c.vel.dot(rel) / (c.vel.norm() * rel.norm());
    const double h1 = rel.norm() < f.cc.los_epsilon ? std::cos(f.cc.alpha) - 1.0
                                                    : cosang + std::cos(f.cc.alpha);
    bool bad = h1 > 0.0;
    if (rel.norm() <= f.cc.gamma1) {
      const Vec3 vrel = x.tail<3>() - c.vel;
      bad = bad || vrel.norm() - f.cc.gamma2 * rel.norm() - f.cc.gamma3 > 0.0;
    }
    if (bad) {
      if (out.safe) out.first_violation = tk;
      out.safe = false;
      ++out.violations;
    }
    if (k == steps) break;
    const StateVector xv = f.ref.state_at(tk + t_back);
    const Vec6 err = x - xv.stacked();
    Vec3 u = -(f.schedule.gain_at(tk + t_back) * err);
    if (u.norm() > f.cc.u_max) u *= f.cc.u_max / u.norm();
    const double h = f.plant.integrator_dt;
    for (int i = 0; i < static_cast<int>(std::lround(dt / h)); ++i) {
      const Vec6 k1 = naive_rhs(x, u, f.earth.mu());
      const Vec6 k2 = naive_rhs(x + 0.5 * h * k1, u, f.earth.mu());
      const Vec6 k3 = naive_rhs(x + 0.5 * h * k2, u, f.earth.mu());
      const Vec6 k4 = naive_rhs(x + h * k3, u, f.earth.mu());
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("config validation") {
  ConstraintConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.alpha == doctest::Approx(kAlpha));
  CHECK(c.u_max == 5e-4);
  CHECK(c.gamma1 == 5.0);
  CHECK(c.gamma2 == 20.0);
  CHECK(c.gamma3 == 1e-3);
  for (double a : {0.0, std::numbers::pi / 2, -0.1}) {
    ConstraintConfig bad;
    bad.alpha = a;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
  ConstraintConfig bad;
  bad.u_max = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.gamma2 = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.los_epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(cone_axis_from_string("velocity") == ConeAxis::Velocity);
  CHECK(cone_axis_from_string("anti_velocity") == ConeAxis::AntiVelocity);
  CHECK_THROWS_AS(cone_axis_from_string("radial"), ConfigError);
}

TEST_CASE("los_constraint examples") {
  const ConstraintConfig cfg;
  const StateVector c = chief_at_origin();
  CHECK(los_constraint(c, offset(c, Vec3(0, 3, 0)), cfg) ==
        doctest::Approx(-0.0603074).epsilon(1e-6));
  CHECK(los_constraint(c, offset(c, Vec3(0, 3, 0)), cfg) ==
        doctest::Approx(std::cos(kAlpha) - 1.0).epsilon(1e-14));
  CHECK(los_constraint(c, offset(c, Vec3(10, 0, 0)), cfg) ==
        doctest::Approx(0.9396926).epsilon(1e-6));
  CHECK(los_constraint(c, offset(c, Vec3(0, 0, 2)), cfg) > 0.0);
  CHECK(los_constraint(c, offset(c, Vec3(0, 0, 5e-4)), cfg) == std::cos(kAlpha) - 1.0);
  CHECK(los_constraint(c, c, cfg) == std::cos(kAlpha) - 1.0);

  // Boundary of the cone.
  const Vec3 edge(std::sin(kAlpha), std::cos(kAlpha), 0.0);
  CHECK(std::abs(los_constraint(c, offset(c, 4.0 * edge), cfg)) < 1e-12);

  StateVector zero_v = c;
  zero_v.vel.setZero();
  CHECK_THROWS_AS(los_constraint(zero_v, offset(c, Vec3(0, 1, 0)), cfg), DomainError);
}

TEST_CASE("cone axis orientation") {
  ConstraintConfig ahead;
  ConstraintConfig behind;
  behind.cone_axis = ConeAxis::AntiVelocity;
  const StateVector c = chief_at_origin();
  const StateVector lead = offset(c, Vec3(0.3, 2, 0));
  const StateVector trail = offset(c, Vec3(0.3, -2, 0));
  CHECK(los_constraint(c, lead, ahead) < 0.0);
  CHECK(los_constraint(c, lead, behind) > 0.0);
  CHECK(los_constraint(c, trail, ahead) > 0.0);
  CHECK(los_constraint(c, trail, behind) < 0.0);
  // Mirror images have equal values.
  CHECK(los_constraint(c, lead, ahead) == doctest::Approx(los_constraint(c, trail, behind)));
}

TEST_CASE("los_constraint scaling invariance") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (auto axis : {ConeAxis::Velocity, ConeAxis::AntiVelocity}) {
    ConstraintConfig cfg;
    cfg.cone_axis = axis;
    for (int i = 0; i < 200; ++i) {
      StateVector c{Vec3(7000 * u(rng), 7000 * u(rng), 7000 * u(rng)),
                    Vec3(7 * u(rng), 7 * u(rng), 7 * u(rng))};
      const Vec3 dp(50 * u(rng), 50 * u(rng), 50 * u(rng));
      if (dp.norm() < 0.1) continue;
      const double h = los_constraint(c, offset(c, dp), cfg);
      const double a = scale(rng);
      const double b = scale(rng);
      StateVector cs = c;
      cs.vel *= a;
      CHECK(los_constraint(cs, offset(cs, b * dp), cfg) == doctest::Approx(h).epsilon(1e-12));
      CHECK(h >= std::cos(cfg.alpha) - 1.0 - 1e-15);
      CHECK(h <= std::cos(cfg.alpha) + 1.0 + 1e-15);
    }
  }
}

TEST_CASE("thrust_constraint") {
  const ConstraintConfig cfg;
  CHECK(thrust_constraint(Vec3::Zero(), cfg) == -cfg.u_max);
  CHECK(thrust_constraint(Vec3(cfg.u_max, 0, 0), cfg) == 0.0);
  CHECK(thrust_constraint(Vec3(3e-4, 4e-4, 0), cfg) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(thrust_constraint(Vec3(0, 0, 1e-3), cfg) == doctest::Approx(5e-4));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 raw = std::pow(10.0, 3 * u(rng)) * Vec3(u(rng), u(rng), u(rng));
    CHECK(thrust_constraint(saturate(raw, cfg.u_max), cfg) <= 0.0);
  }
}

TEST_CASE("soft_docking_constraint") {
  const ConstraintConfig cfg;
  const StateVector c = chief_at_origin();
  CHECK_FALSE(soft_docking_constraint(c, offset(c, Vec3(0, 10, 0)), cfg).has_value());
  const auto one = soft_docking_constraint(c, offset(c, Vec3(0, 1, 0), Vec3(0.001, 0, 0)), cfg);
  REQUIRE(one.has_value());
  CHECK(*one == doctest::Approx(-20.0).epsilon(1e-12));
  const auto apex = soft_docking_constraint(c, offset(c, Vec3::Zero(), Vec3(0, 0, 0.002)), cfg);
  REQUIRE(apex.has_value());
  CHECK(*apex == doctest::Approx(0.001).epsilon(1e-9));

  // Activation is exactly |p| <= gamma1.
  const Vec3 dir = Vec3(1, 2, 2).normalized();
  for (double d : {cfg.gamma1 - 1e-12, cfg.gamma1, cfg.gamma1 + 1e-12}) {
    const StateVector dep = offset(c, d * dir, Vec3(0.01, 0, 0));
    const double pn = (dep.pos - c.pos).norm();
    const auto h3 = soft_docking_constraint(c, dep, cfg);
    CHECK(h3.has_value() == (pn <= cfg.gamma1));
    if (h3) CHECK(std::isfinite(*h3));
  }
}

TEST_CASE("evaluate_constraints worst id") {
  const ConstraintConfig cfg;
  const StateVector c = chief_at_origin();
  auto r = evaluate_constraints(c, offset(c, Vec3(0, 10, 0)), Vec3::Zero(), cfg);
  CHECK(r.satisfied);
  CHECK(r.worst == ConstraintId::None);
  CHECK_FALSE(r.h3.has_value());

  r = evaluate_constraints(c, offset(c, Vec3(10, 0, 0)), Vec3::Zero(), cfg);
  CHECK_FALSE(r.satisfied);
  CHECK(r.worst == ConstraintId::LineOfSight);

  r = evaluate_constraints(c, offset(c, Vec3(0, 10, 0)), Vec3(0, 0, 1.0), cfg);
  CHECK_FALSE(r.satisfied);
  CHECK(r.worst == ConstraintId::Thrust);
  CHECK(r.h2 == doctest::Approx(1.0 - cfg.u_max));

  r = evaluate_constraints(c, offset(c, Vec3(0, 0.01, 0), Vec3(0, 1.5, 0)), Vec3::Zero(), cfg);
  CHECK_FALSE(r.satisfied);
  CHECK(r.worst == ConstraintId::SoftDocking);
  CHECK(to_string(r.worst) == "h3");
}

TEST_CASE("verify_shift: equilibrium tracking is safe") {
  const auto& f = leo();
  const double t = 120.0;
  const double t_back = -30.0;
  const StateVector dep = f.ref.state_at(t + t_back);
  CHECK(los_constraint(f.ref.state_at(t), dep, f.cc) < 0.0);
  const auto res = verify_shift(f.plant, t, dep, t_back, f.ref.period());
  CHECK(res.safe);
  CHECK(res.samples == static_cast<int>(std::ceil(f.ref.period() / 10.0 - 1e-9)) + 1);
  CHECK(res.violated == ConstraintId::None);
}

TEST_CASE("verify_shift: perpendicular placement fails at the first sample") {
  const auto& f = leo();
  const double t = 40.0;
  const StateVector c = f.ref.state_at(t);
  const Vec3 radial = c.pos.normalized();
  const Vec3 perp = (radial - radial.dot(c.vel.normalized()) * c.vel.normalized()).normalized();
  const StateVector dep = offset(c, 10.0 * perp);
  const auto res = verify_shift(f.plant, t, dep, 0.0, f.ref.period());
  CHECK_FALSE(res.safe);
  CHECK(res.samples == 1);
  CHECK(res.violation_time == t);
  CHECK(res.violated == ConstraintId::LineOfSight);
}

TEST_CASE("verify_shift argument checks") {
  const auto& f = leo();
  const StateVector dep = f.ref.state_at(0.0);
  CHECK_THROWS_AS(verify_shift(f.plant, 0.0, dep, 1.0, 100.0), DomainError);
  CHECK_THROWS_AS(verify_shift(f.plant, 0.0, dep, 0.0, 0.0), DomainError);
}

TEST_CASE("verify_shift matches an independent re-simulation") {
  const auto& f = leo();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-f.ref.period() / 10.0, 0.0);
  std::uniform_real_distribution<double> start(0.0, 600.0);
  int safe = 0;
  int unsafe = 0;
  for (int i = 0; i < 24; ++i) {
    const double t = 10.0 * std::floor(start(rng) / 10.0);
    const StateVector c = f.ref.state_at(t);
    double tb = shift(rng);
    StateVector dep;
    if (i % 2 == 0) {
      const Vec3 dp = f.nominal_dp + 4.0 * Vec3(n(rng), n(rng), n(rng));
      const Vec3 dv = f.nominal_dv + 4e-3 * Vec3(n(rng), n(rng), n(rng));
      dep = offset(c, dp, dv);
      if (i % 4 == 0) tb = 0.0;
    } else {
      // Near the virtual target: mostly safe, sometimes not.
      dep = offset(f.ref.state_at(t + tb), 0.5 * Vec3(n(rng), n(rng), n(rng)),
                   5e-4 * Vec3(n(rng), n(rng), n(rng)));
    }
    const double horizon = f.ref.period();
    const auto got = verify_shift(f.plant, t, dep, tb, horizon);
    const auto want = naive_verify(f, t, dep, tb, horizon);
    CAPTURE(i);
    CHECK(got.safe == want.safe);
    if (!want.safe) CHECK(got.violation_time == doctest::Approx(want.first_violation));
    (got.safe ? safe : unsafe)++;
  }
  CHECK(safe > 0);
  CHECK(unsafe > 0);
}

TEST_CASE("verify_shift is monotone in the horizon") {
  const auto& f = leo();
  const StateVector dep = offset(f.ref.state_at(0.0), f.nominal_dp, f.nominal_dv);
  const double full = 2.0 * f.ref.period();
  const auto base = verify_shift(f.plant, 0.0, dep, 0.0, full);
  REQUIRE_FALSE(base.safe);
  REQUIRE(base.violation_time > 0.0);
  const double tv = base.violation_time;
  for (double h : {tv, tv + 10.0, tv + 555.0, full, 3.0 * f.ref.period()}) {
    const auto r = verify_shift(f.plant, 0.0, dep, 0.0, h);
    CHECK_FALSE(r.safe);
    CHECK(r.violation_time == tv);
    CHECK(r.violated == base.violated);
  }
  for (double h : {10.0, tv / 2.0, tv - 10.0})
    CHECK(verify_shift(f.plant, 0.0, dep, 0.0, h).safe);
}

TEST_CASE("closed-loop controls respect the thrust limit") {
  const auto& f = leo();
  StateVector dep = offset(f.ref.state_at(0.0), f.nominal_dp, f.nominal_dv);
  for (int k = 0; k < 200; ++k) {
    const double t = 10.0 * k;
    const auto s = closed_loop_step(f.plant, t, dep, -200.0);
    CHECK(thrust_constraint(s.u, f.cc) <= 0.0);
    dep = s.next_deputy;
  }
}
