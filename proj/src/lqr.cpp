#include "ltsg/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ltsg/errors.hpp"

namespace ltsg {

LqrWeights LqrWeights::defaults() {
  LqrWeights w;
  w.q = Mat6::Zero();
  w.q.diagonal() << 10.0, 10.0, 10.0, 1.0, 1.0, 1.0;
  w.r = Mat3::Identity();
  return w;
}

void LqrWeights::validate() const {
  if (!q.allFinite() || !r.allFinite())
    throw ConfigError("LQR weights must be finite");
  if (!q.isApprox(q.transpose(), 1e-12) || !r.isApprox(r.transpose(), 1e-12))
    throw ConfigError("LQR weights must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat6> qe(q);
  Eigen::SelfAdjointEigenSolver<Mat3> re(r);
  if (qe.eigenvalues().minCoeff() < -1e-12)
    throw ConfigError("Q must be positive semidefinite");
  if (!(re.eigenvalues().minCoeff() > 0.0))
    throw ConfigError("R must be positive definite");
}

Mat3 jacobian_gravity(const Vec3& pos, const GravityModel& model) {
  const double r = pos.norm();
  if (!(r > 0.0)) throw DomainError("gravity gradient at zero radius");
  const double r3 = r * r * r;
  const double r5 = r3 * r * r;
  const Mat3 outer = pos * pos.transpose();
  return outer * (3.0 * model.mu() / r5) - Mat3::Identity() * (model.mu() / r3);
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& m, double tol) {
  const auto n = m.rows();
  const double norm = m.lpNorm<Eigen::Infinity>();
  int squarings = 0;
  if (norm > 0.5)
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd scaled = m / std::ldexp(1.0, squarings);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < 60; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    if (term.lpNorm<Eigen::Infinity>() <= tol * sum.lpNorm<Eigen::Infinity>())
      break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

LinearizedModel discretize(const Vec3& pos_anchor, double dt,
                           const GravityModel& model, double anchor_time) {
  if (!(dt > 0.0)) throw DomainError("discretization step must be positive");
  const Mat3 g = jacobian_gravity(pos_anchor, model);

  // [[A, B], [0, 0]] with A = [[0, I], [G, 0]], B = [[0], [I]].
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(9, 9);
  aug.block<3, 3>(0, 3) = Mat3::Identity();
  aug.block<3, 3>(3, 0) = g;
  aug.block<3, 3>(3, 6) = Mat3::Identity();
  const Eigen::MatrixXd e = expm(aug * dt);

  LinearizedModel lm;
  lm.a_d = e.block<6, 6>(0, 0);
  lm.b_d = e.block<6, 3>(0, 6);
  lm.dt = dt;
  lm.anchor_time = anchor_time;
  return lm;
}

namespace {

Eigen::MatrixXd riccati_map(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                            const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd sa = s * a;
  const Eigen::MatrixXd bts = b.transpose() * s;
  const Eigen::MatrixXd inner = r + bts * b;
  const Eigen::MatrixXd next =
      q + a.transpose() * sa -
      (bts * a).transpose() * inner.ldlt().solve(bts * a);
  return 0.5 * (next + next.transpose());
}

}  // namespace

double dare_residual(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                     const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd res = riccati_map(a, b, q, r, s) - s;
  const double scale = s.lpNorm<Eigen::Infinity>();
  const double num = res.lpNorm<Eigen::Infinity>();
  return scale > 0.0 ? num / scale : num;
}

Eigen::MatrixXd solve_dare(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                           const std::optional<Eigen::MatrixXd>& warm,
                           const DareOptions& opts) {
  Eigen::MatrixXd s = warm ? *warm : q;
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::MatrixXd next = riccati_map(a, b, q, r, s);
    if (!next.allFinite())
      throw SolverError("Riccati iteration diverged", INFINITY);
    const double scale = std::max(next.lpNorm<Eigen::Infinity>(), 1e-300);
    const double change = (next - s).lpNorm<Eigen::Infinity>() / scale;
    s = std::move(next);
    if (change <= opts.tol) return s;
  }
  const double res = dare_residual(a, b, q, r, s);
  if (res < opts.accept_residual) return s;
  throw SolverError("Riccati iteration hit the iteration cap", res);
}

Mat6 solve_dare(const LinearizedModel& model, const LqrWeights& w,
                const std::optional<Mat6>& warm, const DareOptions& opts) {
  std::optional<Eigen::MatrixXd> seed;
  if (warm) seed = Eigen::MatrixXd(*warm);
  return solve_dare(model.a_d, model.b_d, w.q, w.r, seed, opts);
}

Eigen::MatrixXd gain_from_dare(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& r,
                               const Eigen::MatrixXd& s) {
  const Eigen::MatrixXd inner = b.transpose() * s * b + r;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(inner);
  if (!lu.isInvertible())
    throw SolverError("B'SB + R is singular", 0.0);
  return lu.solve(b.transpose() * s * a);
}

Mat36 gain_from_dare(const LinearizedModel& model, const LqrWeights& w,
                     const Mat6& s) {
  return gain_from_dare(model.a_d, model.b_d, w.r, s);
}

GainSchedule::GainSchedule(std::vector<double> grid_times,
                           std::vector<Mat36> gains, double period,
                           std::vector<double> residuals)
    : grid_times_(std::move(grid_times)),
      gains_(std::move(gains)),
      residuals_(std::move(residuals)),
      period_(period) {
  if (grid_times_.size() != gains_.size() || gains_.empty())
    throw ConfigError("gain schedule needs matching, nonempty grid and gains");
  if (!(period_ > 0.0)) throw ConfigError("gain schedule period must be positive");
  for (std::size_t i = 1; i < grid_times_.size(); ++i)
    if (!(grid_times_[i] > grid_times_[i - 1]))
      throw ConfigError("gain schedule grid must increase strictly");
  if (grid_times_.front() != 0.0 || grid_times_.back() >= period_)
    throw ConfigError("gain schedule grid must start at 0 and stay inside one period");

  // Fast path for the k*dt grids produced by build_gain_schedule.
  if (grid_times_.size() > 1) {
    step_ = grid_times_[1];
    uniform_ = true;
    for (std::size_t i = 0; i < grid_times_.size(); ++i)
      if (grid_times_[i] != static_cast<double>(i) * step_) {
        uniform_ = false;
        break;
      }
  }
}

std::size_t GainSchedule::index_at(double t) const {
  double tau = std::fmod(t, period_);
  if (tau < 0.0) tau += period_;
  if (tau >= period_) tau = 0.0;
  const std::size_t n = grid_times_.size();
  if (uniform_) {
    auto i = static_cast<std::size_t>(std::floor(tau / step_));
    // Guard rounding at cell edges so the ZOH rule is exact.
    if (i >= n) i = n - 1;
    while (i + 1 < n && grid_times_[i + 1] <= tau) ++i;
    while (i > 0 && grid_times_[i] > tau) --i;
    return i;
  }
  auto it = std::upper_bound(grid_times_.begin(), grid_times_.end(), tau);
  return static_cast<std::size_t>(it - grid_times_.begin()) - 1;
}

const Mat36& GainSchedule::gain_at(double t) const {
  return gains_[index_at(t)];
}

void GainSchedule::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write gain schedule: " + path.string());
  out << std::setprecision(17);
  out << "ltsg-gain-schedule 1\n";
  out << "period " << period_ << "\n";
  out << "points " << grid_times_.size() << "\n";
  for (std::size_t i = 0; i < grid_times_.size(); ++i) {
    out << grid_times_[i];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 6; ++c) out << ' ' << gains_[i](r, c);
    out << '\n';
  }
  if (!out) throw ConfigError("failed writing gain schedule: " + path.string());
}

GainSchedule GainSchedule::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read gain schedule: " + path.string());
  std::string magic;
  int version = 0;
  std::string key;
  double period = 0.0;
  std::size_t n = 0;
  in >> magic >> version;
  if (magic != "ltsg-gain-schedule" || version != 1)
    throw ConfigError("not a gain schedule file: " + path.string());
  in >> key >> period;
  if (key != "period") throw ConfigError("gain schedule: expected 'period'");
  in >> key >> n;
  if (key != "points") throw ConfigError("gain schedule: expected 'points'");
  std::vector<double> times(n);
  std::vector<Mat36> gains(n);
  for (std::size_t i = 0; i < n; ++i) {
    in >> times[i];
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 6; ++c) in >> gains[i](r, c);
  }
  if (!in) throw ConfigError("truncated gain schedule: " + path.string());
  return GainSchedule(std::move(times), std::move(gains), period);
}

GainSchedule build_gain_schedule(const ReferenceOrbit& orbit,
                                 const LqrWeights& w, double dt) {
  w.validate();
  if (!(dt > 0.0)) throw ConfigError("schedule step must be positive");
  const double period = orbit.period();
  const auto n = static_cast<std::size_t>(std::ceil(period / dt - 1e-9));
  std::vector<double> times(n);
  std::vector<Mat36> gains(n);
  std::vector<double> residuals(n);
  std::optional<Mat6> warm;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * dt;
    const LinearizedModel lm =
        discretize(orbit.state_at(t).pos, dt, orbit.gravity(), t);
    Mat6 s;
    try {
      s = solve_dare(lm, w, warm);
    } catch (const SolverError& e) {
      throw SolverError("DARE failed at grid time " + std::to_string(t) +
                            " s: " + e.what(),
                        e.residual());
    }
    times[i] = t;
    gains[i] = gain_from_dare(lm, w, s);
    residuals[i] = dare_residual(lm.a_d, lm.b_d, w.q, w.r, s);
    warm = s;
  }
  return GainSchedule(std::move(times), std::move(gains), period,
                      std::move(residuals));
}

GainSchedule build_gain_schedule(const OrbitalElements& elements,
                                 const LqrWeights& w, double dt,
                                 const GravityModel& model) {
  return build_gain_schedule(ReferenceOrbit(elements, model), w, dt);
}

Vec3 saturate(const Vec3& u, double u_max) {
  const double n = u.norm();
  if (n == 0.0) return Vec3::Zero();
  if (n <= u_max) return u;
  Vec3 out = (u_max / n) * u;
  // Rounding can leave |out| an ulp above u_max; h2 <= 0 must hold exactly.
  while (out.norm() > u_max) out *= 1.0 - std::numeric_limits<double>::epsilon();
  return out;
}

Vec3 control_law(const GainSchedule& schedule, double schedule_time,
                 const StateVector& deputy, const StateVector& virtual_target,
                 double u_max) {
  const Vec6 err = (deputy - virtual_target).stacked();
  // Regulating form u = -K e; K itself is the positive gain of the DARE.
  const Vec3 raw = -(schedule.gain_at(schedule_time) * err);
  return saturate(raw, u_max);
}

}  // namespace ltsg
