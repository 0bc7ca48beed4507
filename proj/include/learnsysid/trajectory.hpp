#pragma once

#include <string>
#include <vector>

#include "learnsysid/autodiff.hpp"

namespace learnsysid {
namespace sim {

// One logged closed-loop run. R rows are the row-major flattened rotation,
// eta is the applied wrench [T, taux, tauy, tauz], n the motor speeds.
struct Trajectory {
  std::vector<double> t;
  Mat p;      // N x 3
  Mat v;      // N x 3
  Mat R;      // N x 9
  Mat omega;  // N x 3
  Mat eta;    // N x 4
  Mat n;      // N x 4

  long samples() const { return static_cast<long>(t.size()); }
};

extern const std::vector<std::string> kTrajectoryColumns;

void write_trajectory_csv(const std::string& path, const Trajectory& traj);

}  // namespace sim
}  // namespace learnsysid
