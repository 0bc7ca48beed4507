#include "learnsysid/sindy.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace learnsysid {
namespace sindy {

double apply_basis(const std::string& name, double x) {
  if (name == "sin") return std::sin(x);
  if (name == "cos") return std::cos(x);
  if (name == "id") return x;
  throw std::invalid_argument("apply_basis: unknown basis '" + name + "'");
}

Mat build_library(const Mat& X, const FixedLibrary& lib) {
  if (lib.names.empty()) throw std::invalid_argument("build_library: empty library");
  const long d = X.cols();
  Mat out(X.rows(), static_cast<long>(lib.names.size()) * d);
  for (std::size_t b = 0; b < lib.names.size(); ++b) {
    const auto& name = lib.names[b];
    for (long j = 0; j < d; ++j)
      out.col(static_cast<long>(b) * d + j) =
          X.col(j).unaryExpr([&name](double v) { return apply_basis(name, v); });
  }
  return out;
}

namespace {

// Least squares on the active columns. Ridge > 0 solves the averaged normal
// equations; ridge 0 uses a rank-revealing decomposition and reports rank
// deficiency through warnings.
Eigen::VectorXd solve_active(const Mat& theta, const std::vector<long>& active,
                             const Eigen::VectorXd& y, double ridge,
                             std::vector<std::string>& warnings) {
  const long N = theta.rows();
  const long M = static_cast<long>(active.size());
  Mat sub(N, M);
  for (long k = 0; k < M; ++k) sub.col(k) = theta.col(active[static_cast<std::size_t>(k)]);

  if (ridge > 0.0) {
    Mat A = (sub.transpose() * sub) / static_cast<double>(N);
    A.diagonal().array() += ridge;
    const Eigen::VectorXd b = sub.transpose() * y / static_cast<double>(N);
    return A.ldlt().solve(b);
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(sub);
  if (cod.rank() < M)
    warnings.push_back("stlsq: rank-deficient active system (rank " +
                       std::to_string(cod.rank()) + " of " + std::to_string(M) +
                       "), using minimum-norm solution");
  return cod.solve(y);
}

}  // namespace

StlsqResult stlsq(const Mat& theta, const Mat& y, double threshold, double ridge, int max_iters) {
  if (theta.rows() != y.rows())
    throw std::invalid_argument("stlsq: theta and y row counts differ");
  if (!theta.allFinite() || !y.allFinite())
    throw std::invalid_argument("stlsq: non-finite entries");
  if (threshold < 0.0 || ridge < 0.0)
    throw std::invalid_argument("stlsq: threshold and ridge must be non-negative");

  StlsqResult res;
  const long M = theta.cols();
  if (theta.rows() < M)
    res.warnings.push_back("stlsq: underdetermined system, N=" + std::to_string(theta.rows()) +
                           " < M=" + std::to_string(M));
  res.E = Mat::Zero(y.cols(), M);

  for (long i = 0; i < y.cols(); ++i) {
    std::vector<long> active(static_cast<std::size_t>(M));
    for (long j = 0; j < M; ++j) active[static_cast<std::size_t>(j)] = j;
    Eigen::VectorXd w;
    for (int iter = 0; iter < max_iters && !active.empty(); ++iter) {
      w = solve_active(theta, active, y.col(i), ridge, res.warnings);
      std::vector<long> kept_cols;
      Eigen::VectorXd kept_w(w.size());
      long nk = 0;
      for (long k = 0; k < w.size(); ++k)
        if (std::fabs(w(k)) >= threshold) {
          kept_cols.push_back(active[static_cast<std::size_t>(k)]);
          kept_w(nk++) = w(k);
        }
      if (kept_cols.size() == active.size()) break;
      // Keep w aligned with the shrunk set in case the iteration cap ends
      // the loop before the next solve.
      active = std::move(kept_cols);
      w = kept_w.head(nk);
    }
    for (std::size_t k = 0; k < active.size(); ++k)
      res.E(i, active[k]) = w(static_cast<long>(k));
  }
  return res;
}

SparseModel sindy_fit(const data::RegressionDataset& data, const FixedLibrary& lib,
                      double threshold, double ridge, int max_iters) {
  if (data.X.rows() == 0) throw std::invalid_argument("sindy_fit: empty dataset");
  if (data.X.rows() != data.Y.rows())
    throw std::invalid_argument("sindy_fit: X and Y row counts differ");

  SparseModel model;
  model.threshold = threshold;
  model.ridge = ridge;
  model.lib = lib;
  model.norm = compute_normalization(data.X, data.Y);

  const Mat theta = build_library(normalize_x(model.norm, data.X), lib);
  StlsqResult res = stlsq(theta, normalize_y(model.norm, data.Y), threshold, ridge, max_iters);
  model.E = std::move(res.E);
  model.warnings = std::move(res.warnings);
  return model;
}

Mat sindy_predict(const SparseModel& model, const Mat& X) {
  const long d = model.norm.x_mean.cols();
  if (X.cols() != d)
    throw std::invalid_argument("sindy_predict: input width " + std::to_string(X.cols()) +
                                " does not match model width " + std::to_string(d));
  const Mat theta = build_library(normalize_x(model.norm, X), model.lib);
  return denormalize_y(model.norm, theta * model.E.transpose());
}

namespace {
nlohmann::json vec_to_json(const Eigen::RowVectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::RowVectorXd vec_from_json(const nlohmann::json& a) {
  Eigen::RowVectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<long>(i)) = a[i].get<double>();
  return v;
}
}  // namespace

std::string sparse_model_to_json(const SparseModel& model) {
  nlohmann::json j;
  j["library"] = model.lib.names;
  j["threshold"] = model.threshold;
  j["ridge"] = model.ridge;
  j["x_mean"] = vec_to_json(model.norm.x_mean);
  j["x_std"] = vec_to_json(model.norm.x_std);
  j["y_mean"] = vec_to_json(model.norm.y_mean);
  j["y_std"] = vec_to_json(model.norm.y_std);
  j["rows"] = model.E.rows();
  j["cols"] = model.E.cols();
  nlohmann::json coeffs = nlohmann::json::array();
  for (long i = 0; i < model.E.size(); ++i) coeffs.push_back(model.E.data()[i]);
  j["coefficients"] = coeffs;
  j["warnings"] = model.warnings;
  return j.dump(2);
}

SparseModel sparse_model_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  SparseModel m;
  m.lib.names = j.at("library").get<std::vector<std::string>>();
  m.threshold = j.at("threshold").get<double>();
  m.ridge = j.at("ridge").get<double>();
  m.norm.x_mean = vec_from_json(j.at("x_mean"));
  m.norm.x_std = vec_from_json(j.at("x_std"));
  m.norm.y_mean = vec_from_json(j.at("y_mean"));
  m.norm.y_std = vec_from_json(j.at("y_std"));
  const long rows = j.at("rows").get<long>(), cols = j.at("cols").get<long>();
  const auto& coeffs = j.at("coefficients");
  if (static_cast<long>(coeffs.size()) != rows * cols)
    throw std::invalid_argument("sparse_model_from_json: coefficient count mismatch");
  m.E.resize(rows, cols);
  for (long i = 0; i < m.E.size(); ++i) m.E.data()[i] = coeffs[static_cast<std::size_t>(i)].get<double>();
  m.warnings = j.at("warnings").get<std::vector<std::string>>();
  return m;
}

}  // namespace sindy
}  // namespace learnsysid
