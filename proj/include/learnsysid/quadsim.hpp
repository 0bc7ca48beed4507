#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>

#include "learnsysid/trajectory.hpp"

namespace learnsysid {
namespace sim {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

struct QuadState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Mat3 R = Mat3::Identity();  // body to world
  Vec3 omega = Vec3::Zero();
};

struct QuadParams {
  double m = 1.0;
  Mat3 J = Vec3(0.01, 0.01, 0.02).asDiagonal();
  Vec3 g = Vec3(0.0, 0.0, -9.81);
  Mat4 B0 = default_mixer();
  double c_d = 0.3;

  static Mat4 default_mixer();
  void validate() const;
};

struct WindCondition {
  std::string label = "nowind";
  double mean_speed = 0.0;      // m/s
  double amplitude = 0.0;       // m/s
  double frequency = 0.0;       // rad/s
  Vec3 direction = Vec3(1.0, 0.0, 0.0);

  void validate() const;
  Vec3 velocity(double t) const;
};

Vec3 wind_force(const Vec3& v, const Vec3& wind_velocity, double c_d);

Mat3 skew(const Vec3& w);

struct StateDeriv {
  Vec3 dp, dv;
  Mat3 dR;
  Vec3 domega;
};

StateDeriv quad_derivatives(const QuadState& state, const Vec4& eta, const Vec3& wind_velocity,
                            const QuadParams& params);

using WindFn = std::function<Vec3(double)>;

// Classical RK4 on the flattened state with a zero-order-hold wrench; R is
// pulled back onto SO(3) by polar projection after the step.
QuadState rk4_step(const QuadState& state, const Vec4& eta, const WindFn& wind, double t,
                   double dt, const QuadParams& params);

Vec3 figure_eight_reference(double t, double period, double radius, double altitude);

struct ReferencePoint {
  Vec3 p = Vec3::Zero(), v = Vec3::Zero(), a = Vec3::Zero();
};

ReferencePoint figure_eight_state(double t, double period, double radius, double altitude);

struct ControlGains {
  double kp = 6.0;
  double kv = 4.0;
  double kR = 2.0;
  double komega = 0.4;
};

struct ControlOutput {
  Vec4 eta_cmd = Vec4::Zero();      // requested wrench
  Vec4 n = Vec4::Zero();            // motor speeds after the >= 0 clamp
  Vec4 eta_applied = Vec4::Zero();  // B0 * n^2, what the dynamics see
};

// Geometric tracking controller. Keeps the last attitude target so a
// vanishing desired force degrades gracefully instead of dividing by zero.
class BaselineController {
 public:
  explicit BaselineController(ControlGains gains = {}) : gains_(gains) {}
  ControlOutput compute(const QuadState& state, const ReferencePoint& ref,
                        const QuadParams& params);

 private:
  ControlGains gains_;
  Mat3 last_Rd_ = Mat3::Identity();
};

struct SimOptions {
  double duration = 25.11;
  double dt = 0.01;
  double noise_std_v = 0.05;
  double noise_std_omega = 0.05;
  double fe_period = 10.0;
  double fe_radius = 1.5;
  double fe_altitude = 1.0;
  ControlGains gains;
};

Trajectory generate_trajectory(const WindCondition& wind, const SimOptions& opts,
                               const QuadParams& params, std::uint64_t seed);

void write_trajectory_meta(const std::string& path, const WindCondition& wind,
                           const SimOptions& opts, const QuadParams& params, std::uint64_t seed);

// Named wind regimes: meta-training set and held-out evaluation set.
std::vector<WindCondition> training_wind_conditions();
std::vector<WindCondition> evaluation_wind_conditions();
WindCondition wind_condition_by_label(const std::string& label);

}  // namespace sim
}  // namespace learnsysid
