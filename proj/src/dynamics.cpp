#include "ltsg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ltsg/errors.hpp"

namespace ltsg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec6 rk4_step(double t, const Vec6& x, const Vec3& u, double h,
              const GravityModel& model) {
  auto f = [&](double tt, const Vec6& xx) {
    return eom(tt, StateVector::from_stacked(xx), u, model);
  };
  const Vec6 k1 = f(t, x);
  const Vec6 k2 = f(t + 0.5 * h, x + 0.5 * h * k1);
  const Vec6 k3 = f(t + 0.5 * h, x + 0.5 * h * k2);
  const Vec6 k4 = f(t + h, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Integrates one segment with constant control.
Vec6 integrate_segment(Vec6 x, const Vec3& u, double t0, double t1,
                       double step, const GravityModel& model) {
  const double span = t1 - t0;
  if (span <= 0.0) return x;
  // Steps are placed at t0 + i*step to avoid accumulating rounding in t.
  const auto full = static_cast<long>(std::floor(span / step * (1.0 + 1e-12)));
  for (long i = 0; i < full; ++i) {
    const double t = t0 + static_cast<double>(i) * step;
    x = rk4_step(t, x, u, step, model);
    if (!x.allFinite()) throw IntegrationError("non-finite state", t + step);
  }
  const double done = static_cast<double>(full) * step;
  const double rest = span - done;
  if (rest > 1e-12 * std::max(1.0, std::abs(span))) {
    x = rk4_step(t0 + done, x, u, rest, model);
    if (!x.allFinite()) throw IntegrationError("non-finite state", t1);
  }
  return x;
}

}  // namespace

GravityModel::GravityModel(double mu) : mu_(mu) {
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw DomainError("gravitational parameter must be positive");
}

void OrbitalElements::validate() const {
  if (!(sma > 0.0) || !std::isfinite(sma))
    throw UnsupportedOrbitError("semi-major axis must be positive");
  if (!(ecc >= 0.0) || !(ecc < 1.0))
    throw UnsupportedOrbitError("only elliptic orbits (0 <= e < 1) are supported");
  if (!std::isfinite(inc) || !std::isfinite(raan) || !std::isfinite(argp) ||
      !std::isfinite(true_anomaly))
    throw UnsupportedOrbitError("orbital angles must be finite");
}

double orbital_period(const OrbitalElements& el, const GravityModel& model) {
  el.validate();
  return kTwoPi * std::sqrt(el.sma * el.sma * el.sma / model.mu());
}

Vec3 gravity_accel(const Vec3& pos, const GravityModel& model) {
  const double r = pos.norm();
  if (!(r > 0.0)) throw DomainError("gravity evaluated at zero radius");
  return (-model.mu() / (r * r * r)) * pos;
}

Vec6 eom(double /*t*/, const StateVector& state, const Vec3& u,
         const GravityModel& model) {
  Vec6 d;
  d << state.vel, gravity_accel(state.pos, model) + u;
  return d;
}

PiecewiseControl::PiecewiseControl(std::vector<double> times,
                                   std::vector<Vec3> values)
    : times_(std::move(times)), values_(std::move(values)) {
  if (times_.size() != values_.size() || times_.empty())
    throw DomainError("piecewise control needs matching, nonempty times/values");
  if (!std::is_sorted(times_.begin(), times_.end()) ||
      std::adjacent_find(times_.begin(), times_.end()) != times_.end())
    throw DomainError("piecewise control breakpoints must increase strictly");
}

PiecewiseControl PiecewiseControl::constant(const Vec3& u) {
  return PiecewiseControl({0.0}, {u});
}

Vec3 PiecewiseControl::at(double t) const {
  if (values_.empty()) return Vec3::Zero();
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - times_.begin() - 1)];
}

StateVector propagate(const StateVector& state, const PiecewiseControl& u,
                      double t0, double t1, double step,
                      const GravityModel& model) {
  if (!(t1 >= t0)) throw DomainError("propagate requires t1 >= t0");
  if (!(step > 0.0)) throw DomainError("propagate requires a positive step");
  if (!state.finite()) throw IntegrationError("non-finite initial state", t0);

  Vec6 x = state.stacked();
  double seg_start = t0;
  for (double b : u.breakpoints()) {
    if (b <= seg_start) continue;
    if (b >= t1) break;
    x = integrate_segment(x, u.at(seg_start), seg_start, b, step, model);
    seg_start = b;
  }
  x = integrate_segment(x, u.at(seg_start), seg_start, t1, step, model);
  return StateVector::from_stacked(x);
}

StateVector propagate(const StateVector& state, const Vec3& u, double t0,
                      double t1, double step, const GravityModel& model) {
  if (!(t1 >= t0)) throw DomainError("propagate requires t1 >= t0");
  if (!(step > 0.0)) throw DomainError("propagate requires a positive step");
  if (!state.finite()) throw IntegrationError("non-finite initial state", t0);
  return StateVector::from_stacked(
      integrate_segment(state.stacked(), u, t0, t1, step, model));
}

namespace {

// Columns: perifocal P and Q unit vectors in ECI (3-1-3 rotation).
void perifocal_axes(const OrbitalElements& el, Vec3& p_hat, Vec3& q_hat) {
  const double cO = std::cos(el.raan), sO = std::sin(el.raan);
  const double ci = std::cos(el.inc), si = std::sin(el.inc);
  const double cw = std::cos(el.argp), sw = std::sin(el.argp);
  p_hat << cO * cw - sO * sw * ci, sO * cw + cO * sw * ci, sw * si;
  q_hat << -cO * sw - sO * cw * ci, -sO * sw + cO * cw * ci, cw * si;
}

}  // namespace

StateVector elements_to_state(const OrbitalElements& el,
                              const GravityModel& model) {
  el.validate();
  Vec3 p_hat, q_hat;
  perifocal_axes(el, p_hat, q_hat);
  const double p = el.sma * (1.0 - el.ecc * el.ecc);
  const double nu = el.true_anomaly;
  const double r = p / (1.0 + el.ecc * std::cos(nu));
  const double vs = std::sqrt(model.mu() / p);
  StateVector s;
  s.pos = r * std::cos(nu) * p_hat + r * std::sin(nu) * q_hat;
  s.vel = -vs * std::sin(nu) * p_hat + vs * (el.ecc + std::cos(nu)) * q_hat;
  return s;
}

double solve_kepler(double mean_anomaly, double ecc) {
  if (!(ecc >= 0.0 && ecc < 1.0))
    throw UnsupportedOrbitError("Kepler solver needs 0 <= e < 1");
  double m = std::remainder(mean_anomaly, kTwoPi);
  double e_anom = ecc < 0.8 ? m : (m >= 0.0 ? std::numbers::pi : -std::numbers::pi);
  for (int it = 0; it < 50; ++it) {
    const double f = e_anom - ecc * std::sin(e_anom) - m;
    const double delta = f / (1.0 - ecc * std::cos(e_anom));
    e_anom -= delta;
    if (std::abs(delta) < 1e-12) {
      // Restore the revolution count so callers get a continuous angle.
      return e_anom + (mean_anomaly - m);
    }
  }
  throw SolverError("Kepler iteration did not converge", 0.0);
}

ReferenceOrbit::ReferenceOrbit(const OrbitalElements& el,
                               const GravityModel& model)
    : el_(el), model_(model) {
  el.validate();
  perifocal_axes(el_, p_hat_, q_hat_);
  mean_motion_ = std::sqrt(model.mu() / (el.sma * el.sma * el.sma));
  period_ = kTwoPi / mean_motion_;
  const double e = el.ecc;
  const double nu = el.true_anomaly;
  const double e_anom0 =
      std::atan2(std::sqrt(1.0 - e * e) * std::sin(nu), e + std::cos(nu));
  mean_anomaly0_ = e_anom0 - e * std::sin(e_anom0);
}

StateVector ReferenceOrbit::state_at(double t) const {
  const double a = el_.sma;
  const double e = el_.ecc;
  const double e_anom = solve_kepler(mean_anomaly0_ + mean_motion_ * t, e);
  const double ce = std::cos(e_anom), se = std::sin(e_anom);
  const double root = std::sqrt(1.0 - e * e);
  const double r = a * (1.0 - e * ce);
  const double vfac = std::sqrt(model_.mu() * a) / r;
  StateVector s;
  s.pos = a * (ce - e) * p_hat_ + a * root * se * q_hat_;
  s.vel = -vfac * se * p_hat_ + vfac * root * ce * q_hat_;
  return s;
}

VnbFrame vnb_frame(const StateVector& chief) {
  const double v = chief.vel.norm();
  if (!(v > 0.0)) throw FrameError("VNB frame undefined for zero velocity");
  const Vec3 x_hat = chief.vel / v;
  const Vec3 n = chief.pos.cross(x_hat);
  const double nn = n.norm();
  if (!(nn > 1e-12 * std::max(1.0, chief.pos.norm())))
    throw FrameError("VNB frame undefined for parallel position and velocity");
  const Vec3 y_hat = n / nn;
  const Vec3 z_hat = x_hat.cross(y_hat);
  VnbFrame f;
  f.basis.col(0) = x_hat;
  f.basis.col(1) = y_hat;
  f.basis.col(2) = z_hat;
  f.origin = chief;
  return f;
}

Vec3 to_vnb(const VnbFrame& frame, const StateVector& other) {
  return frame.basis.transpose() * (other.pos - frame.origin.pos);
}

Vec3 from_vnb(const VnbFrame& frame, const Vec3& vnb) {
  return frame.origin.pos + frame.basis * vnb;
}

Vec3 rotate_to_vnb(const VnbFrame& frame, const Vec3& v) {
  return frame.basis.transpose() * v;
}

double specific_energy(const StateVector& s, const GravityModel& model) {
  return 0.5 * s.vel.squaredNorm() - model.mu() / s.pos.norm();
}

Vec3 angular_momentum(const StateVector& s) { return s.pos.cross(s.vel); }

}  // namespace ltsg
