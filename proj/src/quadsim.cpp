#include "learnsysid/quadsim.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "learnsysid/mlp.hpp"

namespace learnsysid {
namespace sim {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Box-Muller on raw engine bits; avoids the implementation-defined
// std::normal_distribution.
double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng());
  const double u2 = uniform01(rng());
  if (u1 <= 0.0) u1 = 5e-324;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}
}  // namespace

Mat4 QuadParams::default_mixer() {
  const double kT = 3e-6, kq = 1e-7, l = 0.1;
  Mat4 b;
  b << kT, kT, kT, kT,
      0.0, -l * kT, 0.0, l * kT,
      l * kT, 0.0, -l * kT, 0.0,
      kq, -kq, kq, -kq;
  return b;
}

void QuadParams::validate() const {
  if (m <= 0.0) throw std::invalid_argument("QuadParams: mass must be positive");
  if (c_d < 0.0) throw std::invalid_argument("QuadParams: c_d must be >= 0");
  if ((J - J.transpose()).norm() > 1e-12 || J.llt().info() != Eigen::Success)
    throw std::invalid_argument("QuadParams: J must be symmetric positive definite");
  if (std::fabs(B0.determinant()) < 1e-30)
    throw std::invalid_argument("QuadParams: B0 must be invertible");
}

void WindCondition::validate() const {
  if (mean_speed < 0.0) throw std::invalid_argument("WindCondition: mean speed must be >= 0");
  if (std::fabs(direction.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("WindCondition: direction must be a unit vector");
}

Vec3 WindCondition::velocity(double t) const {
  return direction * (mean_speed + amplitude * std::sin(frequency * t));
}

Vec3 wind_force(const Vec3& v, const Vec3& wind_velocity, double c_d) {
  const Vec3 rel = wind_velocity - v;
  return c_d * rel.norm() * rel;
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
      w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

StateDeriv quad_derivatives(const QuadState& state, const Vec4& eta, const Vec3& wind_velocity,
                            const QuadParams& params) {
  StateDeriv d;
  d.dp = state.v;
  const Vec3 f_u(0.0, 0.0, eta(0));
  const Vec3 f_a = wind_force(state.v, wind_velocity, params.c_d);
  d.dv = params.g + (state.R * f_u + f_a) / params.m;
  d.dR = state.R * skew(state.omega);
  const Vec3 tau = eta.tail<3>();
  d.domega = params.J.inverse() * ((params.J * state.omega).cross(state.omega) + tau);
  return d;
}

namespace {

QuadState advance(const QuadState& s, const StateDeriv& d, double h) {
  QuadState out;
  out.p = s.p + h * d.dp;
  out.v = s.v + h * d.dv;
  out.R = s.R + h * d.dR;
  out.omega = s.omega + h * d.domega;
  return out;
}

Mat3 polar_orthonormalize(const Mat3& R) {
  Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

}  // namespace

QuadState rk4_step(const QuadState& state, const Vec4& eta, const WindFn& wind, double t,
                   double dt, const QuadParams& params) {
  if (dt <= 0.0) throw std::invalid_argument("rk4_step: dt must be positive");
  const StateDeriv k1 = quad_derivatives(state, eta, wind(t), params);
  const StateDeriv k2 = quad_derivatives(advance(state, k1, dt / 2), eta, wind(t + dt / 2), params);
  const StateDeriv k3 = quad_derivatives(advance(state, k2, dt / 2), eta, wind(t + dt / 2), params);
  const StateDeriv k4 = quad_derivatives(advance(state, k3, dt), eta, wind(t + dt), params);

  QuadState out;
  out.p = state.p + dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
  out.v = state.v + dt / 6.0 * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
  out.R = polar_orthonormalize(state.R + dt / 6.0 * (k1.dR + 2.0 * k2.dR + 2.0 * k3.dR + k4.dR));
  out.omega = state.omega + dt / 6.0 * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
  return out;
}

Vec3 figure_eight_reference(double t, double period, double radius, double altitude) {
  if (period <= 0.0) throw std::invalid_argument("figure_eight_reference: period must be positive");
  const double a = 2.0 * kPi / period;
  return Vec3(radius * std::sin(a * t), radius * std::sin(2.0 * a * t) / 2.0, altitude);
}

ReferencePoint figure_eight_state(double t, double period, double radius, double altitude) {
  if (period <= 0.0) throw std::invalid_argument("figure_eight_state: period must be positive");
  const double a = 2.0 * kPi / period;
  ReferencePoint r;
  r.p = figure_eight_reference(t, period, radius, altitude);
  r.v = Vec3(radius * a * std::cos(a * t), radius * a * std::cos(2.0 * a * t), 0.0);
  r.a = Vec3(-radius * a * a * std::sin(a * t), -2.0 * radius * a * a * std::sin(2.0 * a * t), 0.0);
  return r;
}

ControlOutput BaselineController::compute(const QuadState& state, const ReferencePoint& ref,
                                          const QuadParams& params) {
  const Vec3 e_p = ref.p - state.p;
  const Vec3 e_v = ref.v - state.v;
  const Vec3 f_d = params.m * (-params.g + ref.a + gains_.kp * e_p + gains_.kv * e_v);

  Mat3 Rd = last_Rd_;
  if (f_d.norm() > 1e-9) {
    const Vec3 b3 = f_d.normalized();
    const Vec3 b1_ref(1.0, 0.0, 0.0);
    Vec3 b2 = b3.cross(b1_ref);
    if (b2.norm() < 1e-9) b2 = b3.cross(Vec3(0.0, 1.0, 0.0));
    b2.normalize();
    const Vec3 b1 = b2.cross(b3);
    Rd.col(0) = b1;
    Rd.col(1) = b2;
    Rd.col(2) = b3;
    last_Rd_ = Rd;
  }

  const Mat3 e_R_mat = 0.5 * (Rd.transpose() * state.R - state.R.transpose() * Rd);
  const Vec3 e_R(e_R_mat(2, 1), e_R_mat(0, 2), e_R_mat(1, 0));
  const Vec3 e_w = state.omega;  // omega_d = 0
  const Vec3 tau = -gains_.kR * e_R - gains_.komega * e_w;

  ControlOutput out;
  out.eta_cmd << f_d.dot(state.R.col(2)), tau;
  const Vec4 u = params.B0.inverse() * out.eta_cmd;
  for (int i = 0; i < 4; ++i) out.n(i) = std::sqrt(std::max(0.0, u(i)));
  out.eta_applied = params.B0 * out.n.cwiseProduct(out.n);
  return out;
}

Trajectory generate_trajectory(const WindCondition& wind, const SimOptions& opts,
                               const QuadParams& params, std::uint64_t seed) {
  params.validate();
  wind.validate();
  if (opts.dt <= 0.0) throw std::invalid_argument("generate_trajectory: dt must be positive");
  const double count = opts.duration / opts.dt;
  const long N = static_cast<long>(std::llround(count));
  if (N <= 0 || std::fabs(count - static_cast<double>(N)) > 1e-6)
    throw std::invalid_argument("generate_trajectory: duration must be a positive integer multiple of dt");

  std::mt19937_64 rng(seed);
  WindFn wind_fn = [&wind](double t) { return wind.velocity(t); };

  QuadState state;
  const ReferencePoint r0 = figure_eight_state(0.0, opts.fe_period, opts.fe_radius, opts.fe_altitude);
  state.p = r0.p;
  state.v = r0.v;

  BaselineController ctrl(opts.gains);

  Trajectory traj;
  traj.t.resize(static_cast<std::size_t>(N));
  traj.p.resize(N, 3);
  traj.v.resize(N, 3);
  traj.R.resize(N, 9);
  traj.omega.resize(N, 3);
  traj.eta.resize(N, 4);
  traj.n.resize(N, 4);

  for (long i = 0; i < N; ++i) {
    const double t = static_cast<double>(i) * opts.dt;
    const ReferencePoint ref =
        figure_eight_state(t, opts.fe_period, opts.fe_radius, opts.fe_altitude);
    const ControlOutput u = ctrl.compute(state, ref, params);

    traj.t[static_cast<std::size_t>(i)] = t;
    traj.p.row(i) = state.p.transpose();
    for (int j = 0; j < 3; ++j) {
      traj.v(i, j) = state.v(j) + (opts.noise_std_v > 0.0 ? opts.noise_std_v * gaussian(rng) : 0.0);
      traj.omega(i, j) =
          state.omega(j) + (opts.noise_std_omega > 0.0 ? opts.noise_std_omega * gaussian(rng) : 0.0);
    }
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) traj.R(i, 3 * r + c) = state.R(r, c);
    traj.eta.row(i) = u.eta_applied.transpose();
    traj.n.row(i) = u.n.transpose();

    state = rk4_step(state, u.eta_applied, wind_fn, t, opts.dt, params);
  }
  return traj;
}

void write_trajectory_meta(const std::string& path, const WindCondition& wind,
                           const SimOptions& opts, const QuadParams& params, std::uint64_t seed) {
  nlohmann::json j;
  j["wind"] = {{"label", wind.label},
               {"mean_speed", wind.mean_speed},
               {"amplitude", wind.amplitude},
               {"frequency", wind.frequency},
               {"direction", {wind.direction.x(), wind.direction.y(), wind.direction.z()}}};
  j["duration"] = opts.duration;
  j["dt"] = opts.dt;
  j["seed"] = seed;
  j["noise_std_v"] = opts.noise_std_v;
  j["noise_std_omega"] = opts.noise_std_omega;
  j["mass"] = params.m;
  j["c_d"] = params.c_d;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_meta: cannot open " + path);
  out << j.dump(2) << "\n";
}

namespace {
WindCondition make_wind(const std::string& label, double mean, double amp = 0.0, double freq = 0.0) {
  WindCondition w;
  w.label = label;
  w.mean_speed = mean;
  w.amplitude = amp;
  w.frequency = freq;
  return w;
}
}  // namespace

std::vector<WindCondition> training_wind_conditions() {
  return {make_wind("nowind", 0.0),  make_wind("10wind", 1.3), make_wind("20wind", 2.5),
          make_wind("30wind", 3.7),  make_wind("40wind", 4.9), make_wind("50wind", 6.1)};
}

std::vector<WindCondition> evaluation_wind_conditions() {
  return {make_wind("35wind", 4.2), make_wind("70psin20", 8.5, 2.4, 1.0),
          make_wind("70wind", 8.5), make_wind("100wind", 12.1)};
}

WindCondition wind_condition_by_label(const std::string& label) {
  for (const auto& w : training_wind_conditions())
    if (w.label == label) return w;
  for (const auto& w : evaluation_wind_conditions())
    if (w.label == label) return w;
  throw std::invalid_argument("wind_condition_by_label: unknown label '" + label + "'");
}

}  // namespace sim
}  // namespace learnsysid
