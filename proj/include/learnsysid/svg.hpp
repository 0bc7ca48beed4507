#pragma once

#include <string>
#include <vector>

#include "learnsysid/autodiff.hpp"
#include "learnsysid/learn_model.hpp"

namespace learnsysid {
namespace plot {

// One panel per output dimension. Truth is drawn as a wide light band,
// the adaptation-phase prediction on top of it, and the generalization-phase
// prediction offset to start where the adaptation rows end. gen may be empty.
void plot_overlay(const Mat& truth, const Mat& adapt_pred, const Mat& gen_pred,
                  const std::string& path, const std::vector<std::string>& dim_names = {});

// Samples each learned basis function on a 1-d grid and writes both a CSV
// (columns x, m1..mP, sin, cos) and an SVG next to it: base + ".csv"/".svg".
// Vector-mode models get per-input partial-dependence curves instead, holding
// the other inputs at zero.
void plot_basis(const model::LearnedModel& m, double lo, double hi, int samples,
                const std::string& base);

}  // namespace plot
}  // namespace learnsysid
