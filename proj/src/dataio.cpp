#include "learnsysid/dataio.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

namespace learnsysid {
namespace data {

Formulation translational() { return {FormTag::Translational, 3, 3, "translational"}; }
Formulation attitude() { return {FormTag::Attitude, 3, 4, "attitude"}; }
Formulation full() { return {FormTag::Full, 6, 4, "full"}; }

Formulation custom(long I, long U, const std::string& name) {
  if (I <= 0 || U < 0) throw std::invalid_argument("Formulation: need I > 0, U >= 0");
  return {FormTag::Custom, I, U, name};
}

Formulation formulation_by_name(const std::string& name) {
  if (name == "translational") return translational();
  if (name == "attitude") return attitude();
  if (name == "full") return full();
  throw std::invalid_argument("formulation_by_name: unknown formulation '" + name + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, long row, const std::string& col) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::runtime_error("load_trajectory: row " + std::to_string(row) +
                             ", column '" + col + "': cannot parse '" + s + "'");
  return v;
}

}  // namespace

sim::Trajectory load_trajectory(const std::string& path, const LoadOptions& opts,
                                std::vector<std::string>* warnings) {
  if (opts.schema != "v1")
    throw std::invalid_argument("load_trajectory: unknown schema '" + opts.schema + "'");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trajectory: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_trajectory: empty file " + path);
  const auto header = split_csv_line(line);
  std::map<std::string, long> col_of;
  for (std::size_t i = 0; i < header.size(); ++i) col_of[header[i]] = static_cast<long>(i);

  std::vector<long> idx(sim::kTrajectoryColumns.size());
  for (std::size_t c = 0; c < sim::kTrajectoryColumns.size(); ++c) {
    std::string want = sim::kTrajectoryColumns[c];
    auto m = opts.column_mapping.find(want);
    if (m != opts.column_mapping.end()) want = m->second;
    auto it = col_of.find(want);
    if (it == col_of.end())
      throw std::runtime_error("load_trajectory: missing column '" + want + "' in " + path);
    idx[c] = it->second;
  }

  std::vector<std::vector<double>> rows;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw std::runtime_error("load_trajectory: row " + std::to_string(row_no) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
    std::vector<double> vals(sim::kTrajectoryColumns.size());
    for (std::size_t c = 0; c < idx.size(); ++c)
      vals[c] = parse_field(fields[static_cast<std::size_t>(idx[c])], row_no,
                            sim::kTrajectoryColumns[c]);
    rows.push_back(std::move(vals));
  }
  const long N = static_cast<long>(rows.size());
  if (N == 0) throw std::runtime_error("load_trajectory: no data rows in " + path);

  sim::Trajectory traj;
  traj.t.resize(static_cast<std::size_t>(N));
  traj.p.resize(N, 3);
  traj.v.resize(N, 3);
  traj.R.resize(N, 9);
  traj.omega.resize(N, 3);
  traj.eta.resize(N, 4);
  traj.n.resize(N, 4);
  for (long i = 0; i < N; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    traj.t[static_cast<std::size_t>(i)] = r[0];
    for (long j = 0; j < 3; ++j) traj.p(i, j) = r[1 + j];
    for (long j = 0; j < 3; ++j) traj.v(i, j) = r[4 + j];
    for (long j = 0; j < 9; ++j) traj.R(i, j) = r[7 + j];
    for (long j = 0; j < 3; ++j) traj.omega(i, j) = r[16 + j];
    for (long j = 0; j < 4; ++j) traj.eta(i, j) = r[19 + j];
    for (long j = 0; j < 4; ++j) traj.n(i, j) = r[23 + j];
  }

  if (N >= 2) {
    const double dt0 = traj.t[1] - traj.t[0];
    if (dt0 <= 0.0) throw std::runtime_error("load_trajectory: non-increasing time grid");
    for (long i = 2; i < N; ++i) {
      const double dt = traj.t[static_cast<std::size_t>(i)] - traj.t[static_cast<std::size_t>(i - 1)];
      if (std::fabs(dt - dt0) > opts.dt_rel_tol * std::fabs(dt0))
        throw std::runtime_error("load_trajectory: non-uniform dt at row " + std::to_string(i + 2));
    }
  }

  for (long i = 0; i < N; ++i) {
    Eigen::Matrix3d R;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) R(r, c) = traj.R(i, 3 * r + c);
    const double err = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
    if (err > opts.rot_tol) {
      if (warnings)
        warnings->push_back("load_trajectory: rotation at sample " + std::to_string(i) +
                            " off SO(3) by " + std::to_string(err));
      break;
    }
  }
  return traj;
}

namespace {

Mat smooth_columns(const Mat& x, int window) {
  if (window <= 1) return x;
  Mat out(x.rows(), x.cols());
  const long half = window / 2;
  for (long i = 0; i < x.rows(); ++i) {
    const long lo = std::max(0L, i - half);
    const long hi = std::min(x.rows() - 1, i + half);
    out.row(i) = x.middleRows(lo, hi - lo + 1).colwise().mean();
  }
  return out;
}

Mat differentiate(const Mat& x, double dt) {
  const long N = x.rows();
  Mat d(N, x.cols());
  d.row(0) = (-3.0 * x.row(0) + 4.0 * x.row(1) - x.row(2)) / (2.0 * dt);
  for (long i = 1; i + 1 < N; ++i) d.row(i) = (x.row(i + 1) - x.row(i - 1)) / (2.0 * dt);
  d.row(N - 1) = (3.0 * x.row(N - 1) - 4.0 * x.row(N - 2) + x.row(N - 3)) / (2.0 * dt);
  return d;
}

}  // namespace

std::pair<Mat, Mat> estimate_derivatives(const sim::Trajectory& traj, int smooth_window) {
  const long N = traj.samples();
  if (N < 3) throw std::invalid_argument("estimate_derivatives: need at least 3 samples");
  const double dt = traj.t[1] - traj.t[0];
  return {differentiate(smooth_columns(traj.v, smooth_window), dt),
          differentiate(smooth_columns(traj.omega, smooth_window), dt)};
}

RegressionDataset build_features(const sim::Trajectory& traj, const Formulation& form,
                                 const FeatureOptions& opts) {
  const long N = traj.samples();
  auto [vdot, wdot] = estimate_derivatives(traj, opts.smooth_window);

  RegressionDataset ds;
  ds.form = form;
  ds.wind_label = opts.wind_label;

  switch (form.tag) {
    case FormTag::Translational: {
      ds.X.resize(N, 6);
      ds.X.leftCols(3) = traj.v;
      for (long i = 0; i < N; ++i) {
        Eigen::Matrix3d R;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) R(r, c) = traj.R(i, 3 * r + c);
        const Eigen::Vector3d fu(0.0, 0.0, traj.eta(i, 0));
        ds.X.block<1, 3>(i, 3) = (R * fu).transpose();
      }
      ds.Y = vdot;
      break;
    }
    case FormTag::Attitude: {
      ds.X.resize(N, 7);
      ds.X.leftCols(3) = traj.omega;
      ds.X.rightCols(4) = traj.n;
      ds.Y = wdot;
      break;
    }
    case FormTag::Full: {
      ds.X.resize(N, 10);
      ds.X.leftCols(3) = traj.v;
      ds.X.middleCols(3, 3) = traj.omega;
      ds.X.rightCols(4) = traj.n.cwiseProduct(traj.n);
      ds.Y.resize(N, 6);
      ds.Y.leftCols(3) = vdot;
      ds.Y.rightCols(3) = wdot;
      break;
    }
    case FormTag::Custom:
      throw std::invalid_argument("build_features: custom formulations have no trajectory mapping");
  }
  ds.norm = compute_normalization(ds.X, ds.Y);
  return ds;
}

std::pair<RegressionDataset, RegressionDataset> split_task(const RegressionDataset& ds,
                                                           double adapt_fraction) {
  if (!(adapt_fraction > 0.0 && adapt_fraction < 1.0))
    throw std::invalid_argument("split_task: adapt_fraction must be in (0, 1)");
  const long N = ds.samples();
  const long na = static_cast<long>(std::floor(static_cast<double>(N) * adapt_fraction));
  if (na == 0 || na == N)
    throw std::invalid_argument("split_task: split leaves an empty set (N=" + std::to_string(N) +
                                ", fraction=" + std::to_string(adapt_fraction) + ")");

  RegressionDataset adapt, eval;
  adapt.form = eval.form = ds.form;
  adapt.wind_label = eval.wind_label = ds.wind_label;
  adapt.X = ds.X.topRows(na);
  adapt.Y = ds.Y.topRows(na);
  eval.X = ds.X.bottomRows(N - na);
  eval.Y = ds.Y.bottomRows(N - na);
  adapt.norm = compute_normalization(adapt.X, adapt.Y);
  eval.norm = adapt.norm;
  return {std::move(adapt), std::move(eval)};
}

}  // namespace data
}  // namespace learnsysid
