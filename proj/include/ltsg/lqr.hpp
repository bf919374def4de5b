#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "ltsg/dynamics.hpp"

namespace ltsg {

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using Mat36 = Eigen::Matrix<double, 3, 6>;

/// Zero-order-hold discretization of the two-body dynamics linearized at a
/// point of the reference orbit.
struct LinearizedModel {
  Mat6 a_d = Mat6::Identity();
  Mat63 b_d = Mat63::Zero();
  double dt = 0.0;
  double anchor_time = 0.0;
};

struct LqrWeights {
  Mat6 q = Mat6::Identity();
  Mat3 r = Mat3::Identity();

  /// Q = diag(10,10,10,1,1,1), R = I3.
  static LqrWeights defaults();
  void validate() const;
};

/// Gravity-gradient matrix d(a_grav)/d(pos) [1/s^2].
Mat3 jacobian_gravity(const Vec3& pos, const GravityModel& model);

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
Eigen::MatrixXd expm(const Eigen::MatrixXd& m, double tol = 1e-13);

/// A_d = exp(A dt), B_d = int_0^dt exp(A s) ds B via the augmented
/// (Van Loan) exponential.
LinearizedModel discretize(const Vec3& pos_anchor, double dt,
                           const GravityModel& model, double anchor_time = 0.0);

struct DareOptions {
  double tol = 1e-12;       // relative sup-norm change between iterates
  int max_iter = 10000;
  double accept_residual = 1e-9;  // residual that still counts as converged at the cap
};

/// ||DARE(S)||_inf / ||S||_inf with DARE(S) = Q - S + A'SA - A'SB(R+B'SB)^-1 B'SA.
double dare_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                     const Eigen::MatrixXd& s);

/// Fixed-point Riccati iteration seeded from `warm` (or Q).
/// Throws SolverError carrying the final residual when the cap is reached.
Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                           const std::optional<Eigen::MatrixXd>& warm = std::nullopt,
                           const DareOptions& opts = {});
Mat6 solve_dare(const LinearizedModel& model, const LqrWeights& w,
                const std::optional<Mat6>& warm = std::nullopt,
                const DareOptions& opts = {});

/// K = (B'SB + R)^-1 B'SA.
Eigen::MatrixXd gain_from_dare(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& r,
                               const Eigen::MatrixXd& s);
Mat36 gain_from_dare(const LinearizedModel& model, const LqrWeights& w,
                     const Mat6& s);

/// Periodic LQ gains over one orbital period, looked up by zero-order hold.
class GainSchedule {
 public:
  GainSchedule() = default;
  GainSchedule(std::vector<double> grid_times, std::vector<Mat36> gains,
               double period, std::vector<double> residuals = {});

  /// Gain at time t (wrapped modulo the period).
  const Mat36& gain_at(double t) const;
  std::size_t index_at(double t) const;

  const std::vector<double>& grid_times() const noexcept { return grid_times_; }
  const std::vector<Mat36>& gains() const noexcept { return gains_; }
  /// DARE substitution residual of each grid solve (empty when loaded).
  const std::vector<double>& residuals() const noexcept { return residuals_; }
  double period() const noexcept { return period_; }
  bool empty() const noexcept { return gains_.empty(); }

  /// Text dump: header, then one line per grid point `t k00 .. k25`.
  void save(const std::filesystem::path& path) const;
  static GainSchedule load(const std::filesystem::path& path);

 private:
  std::vector<double> grid_times_;
  std::vector<Mat36> gains_;
  std::vector<double> residuals_;
  double period_ = 0.0;
  double step_ = 0.0;
  bool uniform_ = false;
};

GainSchedule build_gain_schedule(const ReferenceOrbit& orbit,
                                 const LqrWeights& w, double dt);
GainSchedule build_gain_schedule(const OrbitalElements& elements,
                                 const LqrWeights& w, double dt,
                                 const GravityModel& model);

/// Direction-preserving saturation to norm u_max.
Vec3 saturate(const Vec3& u, double u_max);

/// Saturated tracking law around the virtual target. The gain is taken at
/// `schedule_time`, the orbit time of the virtual target.
Vec3 control_law(const GainSchedule& schedule, double schedule_time,
                 const StateVector& deputy, const StateVector& virtual_target,
                 double u_max);

}  // namespace ltsg
