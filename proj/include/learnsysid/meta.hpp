#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "learnsysid/dataset.hpp"
#include "learnsysid/learn_model.hpp"

namespace learnsysid {
namespace meta {

struct TaskSet {
  std::vector<data::RegressionDataset> tasks;
  std::string role = "meta-train";
};

struct MetaHyper {
  double alpha = 0.01;   // inner step size
  double beta = 0.001;   // outer step size
  int n = 5;             // inner rounds
  long inner_batch = 64;
  long meta_batch = 6;
  long outer_iters = 2000;
  bool second_order = true;
  double mu_meta = 0.0;  // optional weight decay on the meta objective
  std::uint64_t seed = 0;
  long checkpoint_every = 0;
  std::string checkpoint_base;
};

struct AdaptHyper {
  double rate = 0.005;
  double lambda = 0.1;
  double lipschitz = 1.0;
  int steps = 1;
  std::uint64_t seed = 0;
};

struct TrainLogRow {
  long iter = 0;
  double support_loss = 0.0;
  double query_loss = 0.0;
  double wall_ms = 0.0;
};

struct MetaResult {
  ParamSet params;
  std::vector<TrainLogRow> log;
};

// One differentiable SGD step per entry; grads must cover every key.
ad::NodeMap sgd_step_nodes(ad::Tape& t, const ad::NodeMap& params, const ad::NodeMap& grads,
                           double lr);

// n rounds of simultaneous psi/phi steps on task_loss over (Xs, Ys). With
// second_order the returned nodes stay connected to the inputs, so an outer
// backward differentiates through the adaptation itself.
ad::NodeMap inner_adapt(ad::Tape& t, const model::LearnedModel& m, const ad::NodeMap& params,
                        ad::Node* Xs, ad::Node* Ys, double alpha, int n, bool second_order);

MetaResult meta_train(const TaskSet& tasks, const model::LearnedModel& templ,
                      const MetaHyper& hyper);

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log,
                     bool include_wall_ms);

struct OnlineResult {
  ParamSet params;          // after the full stream
  Mat predictions;          // prequential, normalized units, N x I
  double adapt_error = 0.0; // mean over samples of summed squared residual
  double posthoc_error = 0.0;  // final params re-run over the stream, frozen
};

// Streams the adaptation split in time order: predict, record, then take
// hyper.steps gradient steps on adapt_loss. Inputs are normalized with the
// dataset's own stats before anything touches the model.
OnlineResult online_adapt(const model::LearnedModel& templ, const ParamSet& init,
                          const data::RegressionDataset& stream, const AdaptHyper& hyper);

// Frozen-parameter MSE (sum over dims, mean over samples) in normalized units.
double evaluate_generalization(const model::LearnedModel& templ, const ParamSet& params,
                               const data::RegressionDataset& eval_split);

double mse_sum_dims(const Mat& pred, const Mat& truth);

}  // namespace meta
}  // namespace learnsysid
