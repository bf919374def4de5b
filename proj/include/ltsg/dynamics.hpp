#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace ltsg {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// Earth gravitational parameter [km^3/s^2].
inline constexpr double kEarthMu = 398600.4418;

/// Inertial (ECI) position [km] and velocity [km/s] of a spacecraft.
struct StateVector {
  Vec3 pos = Vec3::Zero();
  Vec3 vel = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 x;
    x << pos, vel;
    return x;
  }
  static StateVector from_stacked(const Vec6& x) {
    return {x.head<3>(), x.tail<3>()};
  }
  bool finite() const { return pos.allFinite() && vel.allFinite(); }
};

inline StateVector operator-(const StateVector& a, const StateVector& b) {
  return {a.pos - b.pos, a.vel - b.vel};
}
inline StateVector operator+(const StateVector& a, const StateVector& b) {
  return {a.pos + b.pos, a.vel + b.vel};
}

/// Point-mass gravity.
class GravityModel {
 public:
  explicit GravityModel(double mu = kEarthMu);
  double mu() const noexcept { return mu_; }

 private:
  double mu_;
};

/// Classical elements. Angles in radians, sma in km.
struct OrbitalElements {
  double sma = 0.0;
  double ecc = 0.0;
  double inc = 0.0;
  double raan = 0.0;
  double argp = 0.0;
  double true_anomaly = 0.0;

  /// Throws UnsupportedOrbitError for non-elliptic or malformed elements.
  void validate() const;
};

double orbital_period(const OrbitalElements& el, const GravityModel& model);

Vec3 gravity_accel(const Vec3& pos, const GravityModel& model);

/// Time derivative [vel; a_grav + u].
Vec6 eom(double t, const StateVector& state, const Vec3& u,
         const GravityModel& model);

/// Control that is constant on each interval [times[i], times[i+1]).
/// The last value holds to +infinity, the first value applies before times[0].
class PiecewiseControl {
 public:
  PiecewiseControl() = default;
  PiecewiseControl(std::vector<double> times, std::vector<Vec3> values);
  static PiecewiseControl constant(const Vec3& u);

  Vec3 at(double t) const;
  std::span<const double> breakpoints() const { return times_; }

 private:
  std::vector<double> times_;
  std::vector<Vec3> values_;
};

/// Fixed-step classic RK4 from t0 to t1 with a final partial step.
/// Control is held constant inside each integration step and steps are split
/// at control breakpoints. Throws IntegrationError on a non-finite state.
StateVector propagate(const StateVector& state, const PiecewiseControl& u,
                      double t0, double t1, double step,
                      const GravityModel& model);
StateVector propagate(const StateVector& state, const Vec3& u, double t0,
                      double t1, double step, const GravityModel& model);

StateVector elements_to_state(const OrbitalElements& el,
                              const GravityModel& model);

/// Eccentric anomaly for mean anomaly `mean_anomaly` (Newton, 1e-12, 50 its).
double solve_kepler(double mean_anomaly, double ecc);

/// Unforced conic that the chief follows. `state_at(t)` is exact Keplerian
/// propagation from the elements' anomaly at t = 0.
class ReferenceOrbit {
 public:
  ReferenceOrbit(const OrbitalElements& el, const GravityModel& model);

  StateVector state_at(double t) const;
  double period() const noexcept { return period_; }
  double mean_motion() const noexcept { return mean_motion_; }
  const OrbitalElements& elements() const noexcept { return el_; }
  const GravityModel& gravity() const noexcept { return model_; }

 private:
  OrbitalElements el_;
  GravityModel model_;
  Vec3 p_hat_;
  Vec3 q_hat_;
  double mean_motion_ = 0.0;
  double mean_anomaly0_ = 0.0;
  double period_ = 0.0;
};

/// Rotating Velocity-Normal-Binormal frame centred on the chief.
/// Columns of `basis` are the x, y, z unit vectors in ECI.
struct VnbFrame {
  Mat3 basis = Mat3::Identity();
  StateVector origin;
};

VnbFrame vnb_frame(const StateVector& chief);

/// ECI position of `other` relative to the frame origin, in VNB axes.
Vec3 to_vnb(const VnbFrame& frame, const StateVector& other);
/// Inverse of to_vnb: ECI position of a point given in VNB coordinates.
Vec3 from_vnb(const VnbFrame& frame, const Vec3& vnb);
/// Rotates an ECI vector into VNB axes (no origin shift, no transport term).
Vec3 rotate_to_vnb(const VnbFrame& frame, const Vec3& v);

double specific_energy(const StateVector& s, const GravityModel& model);
Vec3 angular_momentum(const StateVector& s);

}  // namespace ltsg
