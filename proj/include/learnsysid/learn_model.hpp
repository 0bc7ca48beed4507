#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "learnsysid/dataset.hpp"
#include "learnsysid/mlp.hpp"
#include "learnsysid/params.hpp"

namespace learnsysid {
namespace model {

// Learned basis library Theta(X; psi). Elementwise mode runs one scalar
// network over every input feature, mirroring the structure of the fixed
// sin/cos library; vector mode feeds the whole input vector at once.
struct BasisNet {
  enum class Mode { Elementwise, Vector };
  Mode mode = Mode::Elementwise;
  long P = 2;
  std::vector<long> hidden{12, 16, 24, 48};
  ParamSet psi;

  MlpSpec spec(const data::Formulation& form) const;
};

// Feature-selection network E(X; phi); the flat output reshapes row-major
// to I x W.
struct SelectorNet {
  std::vector<long> hidden{12, 16, 24, 48};
  ParamSet phi;

  MlpSpec spec(const data::Formulation& form, long W) const;
};

struct LearnedModel {
  BasisNet basis;
  SelectorNet sel;
  data::Formulation form;
  Normalization norm;
  double lambda = 0.1;
  double lipschitz = 1.0;
  // Test/containment hooks: a basis pinned to [sin(x_j)..., cos(x_j)...] and
  // a constant selector turn the model into exactly the SINDy predictor.
  bool frozen_trig = false;
  std::optional<Mat> const_E;

  long theta_width() const;
};

LearnedModel make_model(const data::Formulation& form, BasisNet::Mode mode, long P,
                        std::uint64_t seed);

// Tape-level graphs; `params` may hold adapted non-leaf nodes.
ad::Node* theta_forward_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                              ad::Node* Xn);
ad::Node* selector_flat_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                              ad::Node* Xn);
ad::Node* model_predict_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                              ad::Node* Xn);
// Mean over the batch of the squared residual summed across output dims.
ad::Node* task_loss_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                          ad::Node* Xn, ad::Node* Yn);
// Squared residual at one sample plus lambda * max(0, ||f_t - f_prev||_1 - L).
// f_prev == nullptr (first stream sample) leaves the hinge out entirely.
ad::Node* adapt_loss_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                           ad::Node* x, ad::Node* y, const Mat* f_prev, double lambda, double L);

// Value-level conveniences; each builds a private tape.
Mat theta_forward(const LearnedModel& m, const Mat& Xn);
Mat selector_forward(const LearnedModel& m, const Mat& x_row);  // I x W
Mat model_predict(const LearnedModel& m, const Mat& Xn);
double task_loss(const LearnedModel& m, const Mat& Xn, const Mat& Yn);

// psi and phi merged; names keep their "basis."/"sel." prefixes.
ParamSet collect_params(const LearnedModel& m);
void scatter_params(LearnedModel& m, const ParamSet& merged);

void save_model(const LearnedModel& m, const std::string& base);
LearnedModel load_model(const std::string& base);

}  // namespace model
}  // namespace learnsysid
