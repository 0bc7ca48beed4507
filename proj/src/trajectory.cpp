#include "learnsysid/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace learnsysid {
namespace sim {

const std::vector<std::string> kTrajectoryColumns = {
    "t",   "px",   "py",   "pz",   "vx",  "vy",  "vz",  "r11", "r12",
    "r13", "r21",  "r22",  "r23",  "r31", "r32", "r33", "wx",  "wy",
    "wz",  "T",    "taux", "tauy", "tauz", "n1", "n2",  "n3",  "n4"};

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  for (std::size_t c = 0; c < kTrajectoryColumns.size(); ++c)
    out << (c ? "," : "") << kTrajectoryColumns[c];
  out << "\n";

  char buf[32];
  auto put = [&](double x, bool lead_comma) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    if (lead_comma) out << ",";
    out << buf;
  };
  for (long i = 0; i < traj.samples(); ++i) {
    put(traj.t[static_cast<std::size_t>(i)], false);
    for (long j = 0; j < 3; ++j) put(traj.p(i, j), true);
    for (long j = 0; j < 3; ++j) put(traj.v(i, j), true);
    for (long j = 0; j < 9; ++j) put(traj.R(i, j), true);
    for (long j = 0; j < 3; ++j) put(traj.omega(i, j), true);
    for (long j = 0; j < 4; ++j) put(traj.eta(i, j), true);
    for (long j = 0; j < 4; ++j) put(traj.n(i, j), true);
    out << "\n";
  }
}

}  // namespace sim
}  // namespace learnsysid
