#pragma once

#include <string>

#include "learnsysid/autodiff.hpp"
#include "learnsysid/normalization.hpp"

namespace learnsysid {
namespace data {

enum class FormTag { Translational, Attitude, Full, Custom };

// Which dynamics mapping is identified. I output dims, U control features;
// regression inputs are [state features | control features], width I+U.
struct Formulation {
  FormTag tag = FormTag::Custom;
  long I = 0;
  long U = 0;
  std::string name = "custom";

  long width() const { return I + U; }
};

Formulation translational();  // v-dot = f(v, R f_u)
Formulation attitude();       // omega-dot = g(omega, n)
Formulation full();           // [v-dot, omega-dot] = h(v, omega, n^2)
Formulation custom(long I, long U, const std::string& name);
Formulation formulation_by_name(const std::string& name);

struct RegressionDataset {
  Mat X;  // N x (I+U)
  Mat Y;  // N x I
  Formulation form;
  std::string wind_label;
  Normalization norm;

  long samples() const { return X.rows(); }
};

}  // namespace data
}  // namespace learnsysid
