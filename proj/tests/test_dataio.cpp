#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "learnsysid/dataio.hpp"
#include "learnsysid/quadsim.hpp"

using namespace learnsysid;
using testutil::random_mat;

namespace {

sim::Trajectory make_trajectory(long N, double dt, std::mt19937_64& rng) {
  sim::Trajectory tr;
  tr.t.resize(static_cast<std::size_t>(N));
  for (long i = 0; i < N; ++i) tr.t[static_cast<std::size_t>(i)] = dt * static_cast<double>(i);
  tr.p = random_mat(N, 3, rng);
  tr.v = random_mat(N, 3, rng);
  tr.omega = random_mat(N, 3, rng);
  tr.eta = random_mat(N, 4, rng);
  tr.n = random_mat(N, 4, rng).cwiseAbs();
  tr.R.resize(N, 9);
  for (long i = 0; i < N; ++i) {
    const Eigen::Matrix3d R =
        Eigen::AngleAxisd(0.01 * static_cast<double>(i), Eigen::Vector3d::UnitZ())
            .toRotationMatrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) tr.R(i, 3 * r + c) = R(r, c);
  }
  return tr;
}

bool same_trajectory(const sim::Trajectory& a, const sim::Trajectory& b) {
  if (a.t != b.t) return false;
  return testutil::max_abs_diff(a.p, b.p) == 0.0 && testutil::max_abs_diff(a.v, b.v) == 0.0 &&
         testutil::max_abs_diff(a.R, b.R) == 0.0 &&
         testutil::max_abs_diff(a.omega, b.omega) == 0.0 &&
         testutil::max_abs_diff(a.eta, b.eta) == 0.0 && testutil::max_abs_diff(a.n, b.n) == 0.0;
}

}  // namespace

TEST_CASE("trajectory csv round trip is bit exact") {
  std::mt19937_64 rng(2);
  testutil::TempDir tmp("dataio_rt");
  const sim::Trajectory tr = make_trajectory(50, 0.01, rng);
  const std::string path = tmp.file("traj.csv");
  sim::write_trajectory_csv(path, tr);
  const sim::Trajectory back = data::load_trajectory(path);
  CHECK(same_trajectory(tr, back));

  // Re-serializing the loaded copy reproduces the file byte for byte.
  const std::string path2 = tmp.file("traj2.csv");
  sim::write_trajectory_csv(path2, back);
  CHECK(testutil::slurp(path) == testutil::slurp(path2));
}

TEST_CASE("loader tolerates shuffled and renamed columns") {
  std::mt19937_64 rng(4);
  testutil::TempDir tmp("dataio_cols");
  const sim::Trajectory tr = make_trajectory(20, 0.01, rng);
  sim::write_trajectory_csv(tmp.file("base.csv"), tr);

  // Reorder the columns and rename one of them.
  std::string text = testutil::slurp(tmp.file("base.csv"));
  const auto eol = text.find('\n');
  std::string header = text.substr(0, eol);
  std::vector<std::string> cols;
  std::stringstream hs(header);
  std::string c;
  while (std::getline(hs, c, ',')) cols.push_back(c);
  REQUIRE(cols.size() == sim::kTrajectoryColumns.size());

  std::vector<std::string> lines;
  std::stringstream body(text.substr(eol + 1));
  std::string ln;
  while (std::getline(body, ln))
    if (!ln.empty()) lines.push_back(ln);

  std::vector<std::size_t> order(cols.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
  std::ostringstream out;
  for (std::size_t i = 0; i < order.size(); ++i)
    out << (i ? "," : "") << (cols[order[i]] == "t" ? "time_s" : cols[order[i]]);
  out << "\n";
  for (const auto& l : lines) {
    std::vector<std::string> f;
    std::stringstream fs(l);
    while (std::getline(fs, c, ',')) f.push_back(c);
    for (std::size_t i = 0; i < order.size(); ++i) out << (i ? "," : "") << f[order[i]];
    out << "\n";
  }
  testutil::spit(tmp.file("shuffled.csv"), out.str());

  data::LoadOptions opts;
  opts.column_mapping["t"] = "time_s";
  const sim::Trajectory back = data::load_trajectory(tmp.file("shuffled.csv"), opts);
  CHECK(same_trajectory(tr, back));
}

TEST_CASE("loader rejects malformed input") {
  std::mt19937_64 rng(6);
  testutil::TempDir tmp("dataio_bad");
  const sim::Trajectory tr = make_trajectory(10, 0.01, rng);
  sim::write_trajectory_csv(tmp.file("ok.csv"), tr);
  std::string text = testutil::slurp(tmp.file("ok.csv"));

  SUBCASE("missing column") {
    std::string t = text;
    const auto pos = t.find(",wx,");
    REQUIRE(pos != std::string::npos);
    t.replace(pos, 4, ",qx,");
    testutil::spit(tmp.file("bad.csv"), t);
    CHECK_THROWS_WITH_AS(data::load_trajectory(tmp.file("bad.csv")),
                         doctest::Contains("missing column 'wx'"), std::runtime_error);
  }

  SUBCASE("truncated row") {
    std::string t = text;
    t.resize(t.rfind(',') - 3);
    t.push_back('\n');
    testutil::spit(tmp.file("bad.csv"), t);
    CHECK_THROWS_WITH_AS(data::load_trajectory(tmp.file("bad.csv")), doctest::Contains("row"),
                         std::runtime_error);
  }

  SUBCASE("unparseable field") {
    std::string t = text;
    const auto eol = t.find('\n');
    const auto comma = t.find(',', eol + 1);
    t.replace(eol + 1, comma - eol - 1, "abc");
    testutil::spit(tmp.file("bad.csv"), t);
    CHECK_THROWS_WITH_AS(data::load_trajectory(tmp.file("bad.csv")),
                         doctest::Contains("cannot parse"), std::runtime_error);
  }

  SUBCASE("non-uniform time grid") {
    sim::Trajectory warped = tr;
    warped.t[7] += 0.004;
    sim::write_trajectory_csv(tmp.file("bad.csv"), warped);
    CHECK_THROWS_WITH_AS(data::load_trajectory(tmp.file("bad.csv")),
                         doctest::Contains("non-uniform"), std::runtime_error);
  }

  SUBCASE("missing file and empty file") {
    CHECK_THROWS(data::load_trajectory(tmp.file("absent.csv")));
    testutil::spit(tmp.file("empty.csv"), "");
    CHECK_THROWS(data::load_trajectory(tmp.file("empty.csv")));
  }

  SUBCASE("off-manifold rotation warns but loads") {
    sim::Trajectory skewed = tr;
    skewed.R(3, 0) += 0.5;
    sim::write_trajectory_csv(tmp.file("warn.csv"), skewed);
    std::vector<std::string> warnings;
    data::load_trajectory(tmp.file("warn.csv"), {}, &warnings);
    REQUIRE(!warnings.empty());
    CHECK(warnings[0].find("rotation") != std::string::npos);
  }
}

TEST_CASE("derivative estimation is exact on polynomials") {
  const long N = 100;
  const double dt = 0.01;
  sim::Trajectory tr;
  tr.t.resize(static_cast<std::size_t>(N));
  tr.v.resize(N, 3);
  tr.omega.resize(N, 3);
  for (long i = 0; i < N; ++i) {
    const double t = dt * static_cast<double>(i);
    tr.t[static_cast<std::size_t>(i)] = t;
    // Linear and quadratic signals: both differentiated exactly by
    // second-order stencils, including the one-sided ends.
    tr.v.row(i) << 2.0 * t + 1.0, -0.5 * t, 3.0 * t * t;
    tr.omega.row(i) << 1.0, t * t - t, 0.25 * t;
  }
  const auto [vdot, wdot] = data::estimate_derivatives(tr, 0);
  for (long i = 0; i < N; ++i) {
    const double t = dt * static_cast<double>(i);
    CHECK(vdot(i, 0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(vdot(i, 1) == doctest::Approx(-0.5).epsilon(1e-10));
    CHECK(vdot(i, 2) == doctest::Approx(6.0 * t).epsilon(1e-8));
    CHECK(wdot(i, 0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(wdot(i, 1) == doctest::Approx(2.0 * t - 1.0).epsilon(1e-8));
  }
}

TEST_CASE("derivative estimation error on a sinusoid shrinks with dt squared") {
  auto worst_err = [](double dt) {
    const long N = static_cast<long>(std::lround(1.0 / dt));
    sim::Trajectory tr;
    tr.t.resize(static_cast<std::size_t>(N));
    tr.v.resize(N, 3);
    tr.omega = Mat::Zero(N, 3);
    for (long i = 0; i < N; ++i) {
      const double t = dt * static_cast<double>(i);
      tr.t[static_cast<std::size_t>(i)] = t;
      tr.v.row(i) << std::sin(5.0 * t), 0.0, 0.0;
    }
    const auto [vdot, wdot] = data::estimate_derivatives(tr, 0);
    double worst = 0.0;
    for (long i = 0; i < N; ++i) {
      const double t = dt * static_cast<double>(i);
      worst = std::max(worst, std::abs(vdot(i, 0) - 5.0 * std::cos(5.0 * t)));
    }
    return worst;
  };
  const double e1 = worst_err(0.01), e2 = worst_err(0.005);
  CHECK(e1 < 5e-3);
  // Order two: halving dt cuts the error by about four.
  CHECK(e2 < e1 / 3.0);
}

TEST_CASE("smoothing is a no-op for window <= 1 and exact on constants") {
  std::mt19937_64 rng(8);
  sim::Trajectory tr = make_trajectory(30, 0.01, rng);
  const auto [d0, w0] = data::estimate_derivatives(tr, 0);
  const auto [d1, w1] = data::estimate_derivatives(tr, 1);
  CHECK(testutil::max_abs_diff(d0, d1) == 0.0);

  sim::Trajectory flat = tr;
  flat.v = Mat::Ones(30, 3) * 4.2;
  const auto [df, wf] = data::estimate_derivatives(flat, 5);
  CHECK(df.cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS(data::estimate_derivatives(make_trajectory(2, 0.01, rng), 0));
}

TEST_CASE("build_features wiring per formulation") {
  sim::SimOptions opts;
  opts.duration = 1.0;
  opts.noise_std_v = 0.0;
  opts.noise_std_omega = 0.0;
  sim::QuadParams params;
  const sim::Trajectory tr =
      sim::generate_trajectory(sim::wind_condition_by_label("10wind"), opts, params, 3);
  const auto [vdot, wdot] = data::estimate_derivatives(tr, 0);

  const auto trans = data::build_features(tr, data::translational(), {});
  REQUIRE(trans.X.cols() == 6);
  REQUIRE(trans.Y.cols() == 3);
  CHECK(testutil::max_abs_diff(Mat(trans.X.leftCols(3)), tr.v) == 0.0);
  CHECK(testutil::max_abs_diff(trans.Y, vdot) == 0.0);
  // Columns 3..5 hold the world-frame thrust vector R e3 T.
  for (long i : {0L, 17L, 63L}) {
    Eigen::Matrix3d R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) R(r, c) = tr.R(i, 3 * r + c);
    const Eigen::Vector3d want = R * Eigen::Vector3d(0.0, 0.0, tr.eta(i, 0));
    CHECK((trans.X.block<1, 3>(i, 3).transpose() - want).norm() < 1e-14);
  }

  const auto att = data::build_features(tr, data::attitude(), {});
  REQUIRE(att.X.cols() == 7);
  CHECK(testutil::max_abs_diff(Mat(att.X.leftCols(3)), tr.omega) == 0.0);
  CHECK(testutil::max_abs_diff(Mat(att.X.rightCols(4)), tr.n) == 0.0);
  CHECK(testutil::max_abs_diff(att.Y, wdot) == 0.0);

  const auto full = data::build_features(tr, data::full(), {});
  REQUIRE(full.X.cols() == 10);
  REQUIRE(full.Y.cols() == 6);
  CHECK(testutil::max_abs_diff(Mat(full.X.rightCols(4)), Mat(tr.n.cwiseProduct(tr.n))) == 0.0);
  CHECK(testutil::max_abs_diff(Mat(full.Y.leftCols(3)), vdot) == 0.0);
  CHECK(testutil::max_abs_diff(Mat(full.Y.rightCols(3)), wdot) == 0.0);

  CHECK_THROWS(data::build_features(tr, data::custom(2, 0, "x"), {}));
}

TEST_CASE("estimated derivatives approximate the true dynamics") {
  sim::SimOptions opts;
  opts.duration = 3.0;
  opts.noise_std_v = 0.0;
  opts.noise_std_omega = 0.0;
  sim::QuadParams params;
  const sim::WindCondition wind = sim::wind_condition_by_label("20wind");
  const sim::Trajectory tr = sim::generate_trajectory(wind, opts, params, 1);
  const auto [vdot, wdot] = data::estimate_derivatives(tr, 0);

  double worst = 0.0;
  for (long i = 1; i + 1 < tr.samples(); ++i) {
    sim::QuadState s;
    s.p = tr.p.row(i).transpose();
    s.v = tr.v.row(i).transpose();
    s.omega = tr.omega.row(i).transpose();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) s.R(r, c) = tr.R(i, 3 * r + c);
    const sim::StateDeriv d = sim::quad_derivatives(
        s, tr.eta.row(i).transpose(), wind.velocity(tr.t[static_cast<std::size_t>(i)]), params);
    worst = std::max(worst, (Eigen::Vector3d(vdot.row(i).transpose()) - d.dv).norm());
  }
  // Central differences on a smooth closed-loop run: order dt^2 times the
  // local jerk, comfortably below 5e-3 at dt = 0.01.
  CHECK(worst < 5e-3);
}

TEST_CASE("split_task arithmetic and shared stats") {
  std::mt19937_64 rng(10);
  data::RegressionDataset ds;
  ds.form = data::custom(2, 0, "toy");
  ds.X = random_mat(2511, 4, rng);
  ds.Y = random_mat(2511, 2, rng);
  ds.norm = compute_normalization(ds.X, ds.Y);

  const auto [adapt, eval] = data::split_task(ds, 0.5);
  CHECK(adapt.samples() == 1255);
  CHECK(eval.samples() == 1256);
  CHECK(testutil::max_abs_diff(Mat(adapt.X), Mat(ds.X.topRows(1255))) == 0.0);
  CHECK(testutil::max_abs_diff(Mat(eval.Y), Mat(ds.Y.bottomRows(1256))) == 0.0);

  // The eval split reuses the adaptation statistics.
  CHECK(testutil::max_abs_diff(Mat(adapt.norm.x_mean), Mat(eval.norm.x_mean)) == 0.0);
  CHECK(testutil::max_abs_diff(Mat(adapt.norm.y_std), Mat(eval.norm.y_std)) == 0.0);
  const Mat refit = Mat(compute_normalization(adapt.X, adapt.Y).x_mean);
  CHECK(testutil::max_abs_diff(Mat(adapt.norm.x_mean), refit) == 0.0);

  CHECK_THROWS(data::split_task(ds, 0.0));
  CHECK_THROWS(data::split_task(ds, 1.0));
  data::RegressionDataset one;
  one.form = ds.form;
  one.X = random_mat(1, 4, rng);
  one.Y = random_mat(1, 2, rng);
  CHECK_THROWS(data::split_task(one, 0.5));
}

TEST_CASE("normalization round trip and invariances") {
  std::mt19937_64 rng(12);
  Mat X = random_mat(200, 3, rng, 4.0);
  Mat Y = random_mat(200, 2, rng, 2.0);
  const Normalization n = compute_normalization(X, Y);

  CHECK(testutil::max_abs_diff(denormalize_y(n, normalize_y(n, Y)), Y) < 1e-12);
  const Mat Xn = normalize_x(n, X);
  CHECK(std::abs(Xn.col(0).mean()) < 1e-13);
  const double var0 = Xn.col(0).squaredNorm() / 200.0 - std::pow(Xn.col(0).mean(), 2.0);
  CHECK(var0 == doctest::Approx(1.0).epsilon(1e-12));

  // Population stats: duplicating the sample leaves them untouched.
  Mat X2(400, 3), Y2(400, 2);
  X2 << X, X;
  Y2 << Y, Y;
  const Normalization n2 = compute_normalization(X2, Y2);
  CHECK(testutil::max_abs_diff(Mat(n.x_std), Mat(n2.x_std)) < 1e-15);
  CHECK(testutil::max_abs_diff(Mat(n.y_mean), Mat(n2.y_mean)) < 1e-15);

  // Near-constant columns fall back to unit scale instead of blowing up.
  Mat Xc = X;
  Xc.col(1).setConstant(3.3);
  const Normalization nc = compute_normalization(Xc, Y);
  CHECK(nc.x_std(1) == 1.0);
  const Mat Xcn = normalize_x(nc, Xc);
  CHECK(Xcn.col(1).cwiseAbs().maxCoeff() < 1e-12);
}
