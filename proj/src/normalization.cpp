#include "learnsysid/normalization.hpp"

#include <cmath>
#include <stdexcept>

namespace learnsysid {

Eigen::RowVectorXd column_means(const Mat& m) { return m.colwise().mean(); }

Eigen::RowVectorXd column_stds(const Mat& m, const Eigen::RowVectorXd& mean) {
  Eigen::RowVectorXd out(m.cols());
  for (long j = 0; j < m.cols(); ++j) {
    const double var = (m.col(j).array() - mean(j)).square().sum() / static_cast<double>(m.rows());
    const double sd = std::sqrt(var);
    out(j) = sd < 1e-12 ? 1.0 : sd;
  }
  return out;
}

Normalization compute_normalization(const Mat& X, const Mat& Y) {
  if (X.rows() == 0 || Y.rows() != X.rows())
    throw std::invalid_argument("compute_normalization: need matching nonempty X and Y");
  Normalization n;
  n.x_mean = column_means(X);
  n.x_std = column_stds(X, n.x_mean);
  n.y_mean = column_means(Y);
  n.y_std = column_stds(Y, n.y_mean);
  return n;
}

namespace {
Mat apply(const Mat& m, const Eigen::RowVectorXd& mean, const Eigen::RowVectorXd& std) {
  if (m.cols() != mean.cols())
    throw std::invalid_argument("normalization: width " + std::to_string(m.cols()) +
                                " does not match stats width " + std::to_string(mean.cols()));
  Mat out = m;
  out.rowwise() -= mean;
  out.array().rowwise() /= std.array();
  return out;
}
}  // namespace

Mat normalize_x(const Normalization& n, const Mat& X) { return apply(X, n.x_mean, n.x_std); }
Mat normalize_y(const Normalization& n, const Mat& Y) { return apply(Y, n.y_mean, n.y_std); }

Mat denormalize_y(const Normalization& n, const Mat& Yn) {
  if (Yn.cols() != n.y_mean.cols())
    throw std::invalid_argument("denormalize_y: width mismatch");
  Mat out = Yn;
  out.array().rowwise() *= n.y_std.array();
  out.rowwise() += n.y_mean;
  return out;
}

}  // namespace learnsysid
