#pragma once

#include <Eigen/Dense>

#include "learnsysid/autodiff.hpp"

namespace learnsysid {

// Per-column z-scoring stats. Population variance (1/N) so that duplicating
// every sample leaves the stats, and therefore the downstream fit, unchanged.
struct Normalization {
  Eigen::RowVectorXd x_mean, x_std, y_mean, y_std;
};

Eigen::RowVectorXd column_means(const Mat& m);
// Population std with near-constant columns floored to 1.
Eigen::RowVectorXd column_stds(const Mat& m, const Eigen::RowVectorXd& mean);

Normalization compute_normalization(const Mat& X, const Mat& Y);

Mat normalize_x(const Normalization& n, const Mat& X);
Mat normalize_y(const Normalization& n, const Mat& Y);
Mat denormalize_y(const Normalization& n, const Mat& Yn);

}  // namespace learnsysid
