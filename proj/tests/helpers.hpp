#pragma once

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "learnsysid/autodiff.hpp"
#include "learnsysid/params.hpp"

namespace testutil {

using learnsysid::Mat;

inline Mat random_mat(long r, long c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

// Central-difference gradient of a scalar functional of one ParamSet. The
// builder must re-evaluate from the raw values on every call.
using ScalarFn = std::function<double(const learnsysid::ParamSet&)>;

inline learnsysid::ParamSet fd_gradient(const learnsysid::ParamSet& params, const ScalarFn& f,
                                        double h = 1e-6) {
  learnsysid::ParamSet g = params;
  learnsysid::ParamSet work = params;
  for (std::size_t e = 0; e < params.size(); ++e) {
    const Mat& base = params.entries()[e].second;
    Mat& slot = work.entries()[e].second;
    Mat& gout = g.entries()[e].second;
    for (long i = 0; i < base.rows(); ++i)
      for (long j = 0; j < base.cols(); ++j) {
        const double v0 = base(i, j);
        slot(i, j) = v0 + h;
        const double fp = f(work);
        slot(i, j) = v0 - h;
        const double fm = f(work);
        slot(i, j) = v0;
        gout(i, j) = (fp - fm) / (2.0 * h);
      }
  }
  return g;
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Relative mismatch with an absolute floor so zero gradients compare cleanly.
inline double rel_diff(const Mat& a, const Mat& b, double floor = 1e-6) {
  double worst = 0.0;
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j) {
      const double denom = std::max({std::abs(a(i, j)), std::abs(b(i, j)), floor});
      worst = std::max(worst, std::abs(a(i, j) - b(i, j)) / denom);
    }
  return worst;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("learnsysid_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string source_path(const std::string& rel) {
  return std::string(LEARNSYSID_SOURCE_DIR) + "/" + rel;
}

}  // namespace testutil
