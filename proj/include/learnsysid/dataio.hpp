#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "learnsysid/dataset.hpp"
#include "learnsysid/trajectory.hpp"

namespace learnsysid {
namespace data {

struct LoadOptions {
  std::string schema = "v1";
  // internal column name -> header name in the file, for external exports
  std::map<std::string, std::string> column_mapping;
  double dt_rel_tol = 1e-6;
  double rot_tol = 1e-3;
};

// Header-keyed CSV ingestion; column order in the file is irrelevant.
// Non-uniform time grids are an error, imperfect rotations only a warning.
sim::Trajectory load_trajectory(const std::string& path, const LoadOptions& opts = {},
                                std::vector<std::string>* warnings = nullptr);

// Central differences inside, one-sided second-order stencils at the ends.
// window > 1 applies centered moving-average smoothing before differencing.
std::pair<Mat, Mat> estimate_derivatives(const sim::Trajectory& traj, int smooth_window = 0);

struct FeatureOptions {
  int smooth_window = 0;
  std::string wind_label;
};

RegressionDataset build_features(const sim::Trajectory& traj, const Formulation& form,
                                 const FeatureOptions& opts = {});

// Chronological prefix/suffix split. The eval half reuses the adaptation
// half's normalization stats: the deployed model cannot see the future.
std::pair<RegressionDataset, RegressionDataset> split_task(const RegressionDataset& ds,
                                                           double adapt_fraction);

}  // namespace data
}  // namespace learnsysid
