#pragma once

#include <string>
#include <vector>

#include "learnsysid/autodiff.hpp"
#include "learnsysid/dataset.hpp"
#include "learnsysid/normalization.hpp"

namespace learnsysid {
namespace sindy {

// Named elementwise basis functions applied to every input column. Column
// b*(width)+j of the library is basis b applied to input column j.
struct FixedLibrary {
  std::vector<std::string> names{"sin", "cos"};
};

double apply_basis(const std::string& name, double x);

Mat build_library(const Mat& X, const FixedLibrary& lib);

struct StlsqResult {
  Mat E;  // outputs x library columns
  std::vector<std::string> warnings;
};

// Sequentially thresholded least squares with an independent active set per
// output row. Ridge is applied to sample-averaged normal equations so that
// duplicating every row leaves the solution unchanged; ridge 0 falls back to
// a minimum-norm solve.
StlsqResult stlsq(const Mat& theta, const Mat& y, double threshold, double ridge, int max_iters);

struct SparseModel {
  Mat E;
  double threshold = 0.2;
  double ridge = 1e-6;
  FixedLibrary lib;
  Normalization norm;
  std::vector<std::string> warnings;
};

// Fit stats are computed on the given data itself; the stored normalization
// is what sindy_predict applies.
SparseModel sindy_fit(const data::RegressionDataset& data, const FixedLibrary& lib,
                      double threshold, double ridge, int max_iters = 20);

// build_library(normalized X) * E^T, mapped back to raw target units.
Mat sindy_predict(const SparseModel& model, const Mat& X);

std::string sparse_model_to_json(const SparseModel& model);
SparseModel sparse_model_from_json(const std::string& text);

}  // namespace sindy
}  // namespace learnsysid
