#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "learnsysid/quadsim.hpp"

using namespace learnsysid;
using sim::Mat3;
using sim::Vec3;
using sim::Vec4;

namespace {

sim::QuadState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  sim::QuadState s;
  s.p = Vec3(u(rng), u(rng), 1.0 + u(rng));
  s.v = Vec3(u(rng), u(rng), u(rng));
  s.omega = 0.5 * Vec3(u(rng), u(rng), u(rng));
  // Rotation from a random axis-angle.
  Vec3 axis(u(rng), u(rng), u(rng));
  axis.normalize();
  const double angle = 0.4 * u(rng);
  s.R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
  return s;
}

// Fixed-step explicit Euler with the same derivative field: an independent
// integrator for cross-checking RK4.
sim::QuadState euler_run(sim::QuadState s, const Vec4& eta, const sim::WindFn& wind, double t0,
                         double dt, long steps, const sim::QuadParams& params) {
  double t = t0;
  for (long i = 0; i < steps; ++i) {
    const sim::StateDeriv d = sim::quad_derivatives(s, eta, wind(t), params);
    s.p += dt * d.dp;
    s.v += dt * d.dv;
    s.R += dt * d.dR;
    s.omega += dt * d.domega;
    t += dt;
  }
  // Project once at the end for a fair comparison.
  Eigen::JacobiSVD<Mat3> svd(s.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  s.R = svd.matrixU() * svd.matrixV().transpose();
  return s;
}

}  // namespace

TEST_CASE("skew matrix reproduces the cross product") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 10; ++k) {
    const Vec3 w(u(rng), u(rng), u(rng)), v(u(rng), u(rng), u(rng));
    CHECK((sim::skew(w) * v - w.cross(v)).norm() < 1e-15);
    CHECK((sim::skew(w) + sim::skew(w).transpose()).norm() == 0.0);
  }
}

TEST_CASE("wind force model") {
  const double c_d = 0.3;
  CHECK(sim::wind_force(Vec3(1.0, 2.0, 3.0), Vec3(1.0, 2.0, 3.0), c_d).norm() == 0.0);

  const Vec3 v(0.0, 0.0, 0.0), w(4.0, 0.0, 0.0);
  const Vec3 f = sim::wind_force(v, w, c_d);
  // c_d * |w - v| * (w - v): quadratic in the relative speed, along it.
  CHECK(f.x() == doctest::Approx(c_d * 16.0).epsilon(1e-14));
  CHECK(f.y() == 0.0);
  CHECK(f.z() == 0.0);
  CHECK((sim::wind_force(w, v, c_d) + f).norm() < 1e-14);
}

TEST_CASE("quad_derivatives matches a scalar-loop recomputation") {
  std::mt19937_64 rng(17);
  sim::QuadParams params;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    const sim::QuadState s = random_state(rng);
    const Vec4 eta(9.0 + u(rng), 0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
    const Vec3 wind(u(rng), u(rng), u(rng));
    const sim::StateDeriv d = sim::quad_derivatives(s, eta, wind, params);

    CHECK((d.dp - s.v).norm() == 0.0);

    const Vec3 thrust_world = s.R * Vec3(0.0, 0.0, eta(0));
    const Vec3 fa = params.c_d * (wind - s.v).norm() * (wind - s.v);
    const Vec3 dv_expected = params.g + thrust_world / params.m + fa / params.m;
    CHECK((d.dv - dv_expected).norm() < 1e-14);

    CHECK((d.dR - s.R * sim::skew(s.omega)).norm() < 1e-14);

    const Vec3 tau(eta(1), eta(2), eta(3));
    const Vec3 Jw = params.J * s.omega;
    const Vec3 domega_expected = params.J.inverse() * (Jw.cross(s.omega) + tau);
    CHECK((d.domega - domega_expected).norm() < 1e-13);
  }
}

TEST_CASE("hover equilibrium is preserved to machine precision") {
  sim::QuadParams params;
  const Vec4 eta(params.m * 9.81, 0.0, 0.0, 0.0);
  auto nowind = [](double) { return Vec3::Zero(); };
  sim::QuadState s;
  s.p = Vec3(0.0, 0.0, 1.0);
  for (int i = 0; i < 100; ++i) s = sim::rk4_step(s, eta, nowind, 0.01 * i, 0.01, params);
  CHECK((s.p - Vec3(0.0, 0.0, 1.0)).norm() < 1e-9);
  CHECK(s.v.norm() < 1e-9);
  CHECK((s.R - Mat3::Identity()).norm() < 1e-12);
  CHECK(s.omega.norm() < 1e-12);
}

TEST_CASE("free fall without drag follows the closed form") {
  sim::QuadParams params;
  params.c_d = 0.0;
  auto nowind = [](double) { return Vec3::Zero(); };
  sim::QuadState s;
  s.p = Vec3(0.0, 0.0, 100.0);
  const double dt = 0.01;
  for (int i = 0; i < 100; ++i) s = sim::rk4_step(s, Vec4::Zero(), nowind, dt * i, dt, params);
  const double T = 1.0;
  // Quadratic trajectory, integrated exactly by RK4.
  CHECK(std::abs(s.v.z() + 9.81 * T) < 1e-9);
  CHECK(std::abs(s.p.z() - (100.0 - 0.5 * 9.81 * T * T)) < 1e-9);
  CHECK(s.v.head<2>().norm() < 1e-12);
}

TEST_CASE("rk4 agrees with a fine-step Euler integration") {
  std::mt19937_64 rng(29);
  sim::QuadParams params;
  const sim::QuadState s0 = random_state(rng);
  const Vec4 eta(9.5, 0.02, -0.015, 0.01);
  auto wind = [](double t) { return Vec3(1.0 + 0.2 * std::sin(t), 0.0, 0.0); };

  sim::QuadState rk = s0;
  for (int i = 0; i < 100; ++i) rk = sim::rk4_step(rk, eta, wind, 0.01 * i, 0.01, params);
  const sim::QuadState eu = euler_run(s0, eta, wind, 0.0, 1e-6, 1000000, params);

  CHECK((rk.p - eu.p).norm() < 1e-5);
  CHECK((rk.v - eu.v).norm() < 1e-5);
  CHECK((rk.R - eu.R).norm() < 1e-5);
  CHECK((rk.omega - eu.omega).norm() < 1e-5);
}

TEST_CASE("rk4 keeps the rotation orthonormal") {
  std::mt19937_64 rng(31);
  sim::QuadParams params;
  sim::QuadState s = random_state(rng);
  s.omega = Vec3(2.0, -1.5, 1.0);
  for (int i = 0; i < 500; ++i) {
    s = sim::rk4_step(s, Vec4(9.0, 0.01, 0.0, -0.01), [](double) { return Vec3::Zero(); },
                      0.01 * i, 0.01, params);
    CHECK((s.R.transpose() * s.R - Mat3::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("conserved quantities under zero wrench") {
  sim::QuadParams params;
  params.c_d = 0.0;
  std::mt19937_64 rng(41);
  sim::QuadState s = random_state(rng);
  s.omega = Vec3(1.0, -0.7, 0.4);
  const double E0 = 0.5 * params.m * s.v.squaredNorm() + params.m * 9.81 * s.p.z();
  const double L0 = (params.J * s.omega).norm();
  for (int i = 0; i < 200; ++i)
    s = sim::rk4_step(s, Vec4::Zero(), [](double) { return Vec3::Zero(); }, 0.01 * i, 0.01, params);
  const double E1 = 0.5 * params.m * s.v.squaredNorm() + params.m * 9.81 * s.p.z();
  const double L1 = (params.J * s.omega).norm();
  CHECK(std::abs(E1 - E0) / std::abs(E0) < 1e-6);
  CHECK(std::abs(L1 - L0) / L0 < 1e-6);
}

TEST_CASE("figure eight reference") {
  const double T = 10.0, r = 1.5, alt = 1.0;
  const Vec3 p0 = sim::figure_eight_reference(0.0, T, r, alt);
  CHECK((p0 - Vec3(0.0, 0.0, alt)).norm() == 0.0);
  CHECK((sim::figure_eight_reference(3.7, T, r, alt) -
         sim::figure_eight_reference(3.7 + T, T, r, alt)).norm() < 1e-12);

  // Extremes of the first lobe.
  const Vec3 quarter = sim::figure_eight_reference(T / 4.0, T, r, alt);
  CHECK(quarter.x() == doctest::Approx(r).epsilon(1e-12));

  // v and a are the analytic derivatives of p.
  for (double t : {0.3, 1.9, 4.4, 7.2}) {
    const sim::ReferencePoint ref = sim::figure_eight_state(t, T, r, alt);
    const double h = 1e-6;
    const Vec3 vfd = (sim::figure_eight_reference(t + h, T, r, alt) -
                      sim::figure_eight_reference(t - h, T, r, alt)) /
                     (2.0 * h);
    const sim::ReferencePoint rp = sim::figure_eight_state(t + h, T, r, alt);
    const sim::ReferencePoint rm = sim::figure_eight_state(t - h, T, r, alt);
    const Vec3 afd = (rp.v - rm.v) / (2.0 * h);
    CHECK((ref.v - vfd).norm() < 1e-7);
    CHECK((ref.a - afd).norm() < 1e-6);
  }
  CHECK_THROWS(sim::figure_eight_reference(0.0, 0.0, r, alt));
  CHECK_THROWS(sim::figure_eight_state(0.0, -1.0, r, alt));
}

TEST_CASE("mixer maps motor speeds to wrench and back") {
  const sim::Mat4 B0 = sim::QuadParams::default_mixer();
  CHECK(std::abs(B0.determinant()) > 1e-30);
  const Vec4 n(400.0, 410.0, 395.0, 405.0);
  const Vec4 eta = B0 * n.cwiseProduct(n);
  const Vec4 n2 = (B0.inverse() * eta).cwiseSqrt();
  CHECK((n2 - n).norm() < 1e-9);
}

TEST_CASE("controller output is consistent with the mixer") {
  sim::QuadParams params;
  sim::BaselineController ctrl;
  std::mt19937_64 rng(53);
  const sim::QuadState s = random_state(rng);
  const sim::ReferencePoint ref = sim::figure_eight_state(1.0, 10.0, 1.5, 1.0);
  const sim::ControlOutput u = ctrl.compute(s, ref, params);
  CHECK((u.eta_applied - params.B0 * u.n.cwiseProduct(u.n)).norm() < 1e-12);
  CHECK(u.n.minCoeff() >= 0.0);
  CHECK(u.eta_applied(0) > 0.0);
}

TEST_CASE("wind condition catalogue") {
  const auto train = sim::training_wind_conditions();
  REQUIRE(train.size() == 6);
  CHECK(train[0].label == "nowind");
  CHECK(train[0].mean_speed == 0.0);
  CHECK(train[1].label == "10wind");
  CHECK(train[1].mean_speed == doctest::Approx(1.3));
  CHECK(train[5].label == "50wind");
  CHECK(train[5].mean_speed == doctest::Approx(6.1));

  const auto eval = sim::evaluation_wind_conditions();
  REQUIRE(eval.size() == 4);
  CHECK(eval[0].label == "35wind");
  CHECK(eval[0].mean_speed == doctest::Approx(4.2));
  CHECK(eval[1].label == "70psin20");
  CHECK(eval[1].mean_speed == doctest::Approx(8.5));
  CHECK(eval[1].amplitude == doctest::Approx(2.4));
  CHECK(eval[2].label == "70wind");
  CHECK(eval[3].label == "100wind");
  CHECK(eval[3].mean_speed == doctest::Approx(12.1));

  const sim::WindCondition psin = sim::wind_condition_by_label("70psin20");
  // Sinusoidal gusts ride on the mean along the fixed direction.
  const double t = 0.77;
  const Vec3 expect = (8.5 + 2.4 * std::sin(psin.frequency * t)) * psin.direction;
  CHECK((psin.velocity(t) - expect).norm() < 1e-12);
  CHECK(psin.frequency > 0.0);
  CHECK_THROWS(sim::wind_condition_by_label("80wind"));

  const sim::WindCondition steady = sim::wind_condition_by_label("35wind");
  CHECK((steady.velocity(0.0) - steady.velocity(12.3)).norm() == 0.0);
}

TEST_CASE("generate_trajectory basics") {
  sim::SimOptions opts;
  opts.duration = 2.0;
  opts.dt = 0.01;
  opts.noise_std_v = 0.0;
  opts.noise_std_omega = 0.0;
  sim::QuadParams params;
  const sim::WindCondition nowind = sim::wind_condition_by_label("nowind");

  const sim::Trajectory a = sim::generate_trajectory(nowind, opts, params, 5);
  REQUIRE(a.samples() == 200);
  CHECK(a.t[0] == 0.0);
  CHECK(a.t[123] == doctest::Approx(1.23).epsilon(1e-14));

  SUBCASE("noiseless runs are seed-independent, noisy runs are seeded") {
    const sim::Trajectory b = sim::generate_trajectory(nowind, opts, params, 99);
    CHECK(testutil::max_abs_diff(a.v, b.v) == 0.0);

    sim::SimOptions noisy = opts;
    noisy.noise_std_v = 0.05;
    noisy.noise_std_omega = 0.05;
    const sim::Trajectory c = sim::generate_trajectory(nowind, noisy, params, 7);
    const sim::Trajectory d = sim::generate_trajectory(nowind, noisy, params, 7);
    const sim::Trajectory e = sim::generate_trajectory(nowind, noisy, params, 8);
    CHECK(testutil::max_abs_diff(c.v, d.v) == 0.0);
    CHECK(testutil::max_abs_diff(c.v, e.v) > 0.0);
    // Noise corrupts the logs, not the closed-loop state.
    CHECK(testutil::max_abs_diff(c.p, a.p) == 0.0);
    CHECK(testutil::max_abs_diff(c.eta, a.eta) == 0.0);
  }

  SUBCASE("logged rotations stay orthonormal") {
    for (long i = 0; i < a.samples(); ++i) {
      Mat3 R;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R(r, c) = a.R(i, 3 * r + c);
      CHECK((R.transpose() * R - Mat3::Identity()).norm() < 1e-9);
    }
  }

  SUBCASE("default sample count") {
    sim::SimOptions full;
    full.noise_std_v = 0.0;
    full.noise_std_omega = 0.0;
    const sim::Trajectory t =
        sim::generate_trajectory(nowind, full, params, 0);
    CHECK(t.samples() == 2511);
  }

  SUBCASE("duration must be a multiple of dt") {
    sim::SimOptions bad = opts;
    bad.duration = 2.005;
    CHECK_THROWS(sim::generate_trajectory(nowind, bad, params, 0));
  }
}

TEST_CASE("controller tracks the figure eight in calm air") {
  sim::SimOptions opts;
  opts.duration = 20.0;
  opts.noise_std_v = 0.0;
  opts.noise_std_omega = 0.0;
  sim::QuadParams params;
  const sim::Trajectory traj =
      sim::generate_trajectory(sim::wind_condition_by_label("nowind"), opts, params, 0);

  double se = 0.0;
  for (long i = 0; i < traj.samples(); ++i) {
    const Vec3 ref = sim::figure_eight_reference(traj.t[static_cast<std::size_t>(i)],
                                                 opts.fe_period, opts.fe_radius, opts.fe_altitude);
    se += (Vec3(traj.p(i, 0), traj.p(i, 1), traj.p(i, 2)) - ref).squaredNorm();
  }
  const double rms = std::sqrt(se / static_cast<double>(traj.samples()));
  CHECK(rms < 0.2);
}

TEST_CASE("parameter validation") {
  sim::QuadParams p;
  p.m = -1.0;
  CHECK_THROWS(p.validate());
  p.m = 1.0;
  p.c_d = -0.1;
  CHECK_THROWS(p.validate());

  sim::WindCondition w;
  w.direction = Vec3::Zero();
  CHECK_THROWS(w.validate());
  w.direction = Vec3(1.0, 0.0, 0.0);
  w.mean_speed = -2.0;
  CHECK_THROWS(w.validate());
}
