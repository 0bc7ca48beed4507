#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "learnsysid/config.hpp"
#include "learnsysid/dataset.hpp"
#include "learnsysid/learn_model.hpp"
#include "learnsysid/meta.hpp"
#include "learnsysid/params.hpp"

namespace learnsysid {
namespace eval {

struct TaskReport {
  std::string method;       // "SINDy" or "LeARN"
  std::string formulation;
  std::string wind_label;
  double adapt_error = 0.0;
  double gen_error = 0.0;
  double posthoc_error = 0.0;  // frozen final params over the adaptation stream
  double runtime_s = 0.0;      // stdout only, never written into artifacts
  std::uint64_t config_hash = 0;
  bool ok = true;
  std::string error;
};

// A report plus the prediction series behind it, in normalized units.
struct TaskRun {
  TaskReport report;
  Mat adapt_pred;
  Mat gen_pred;
};

struct ComparisonSummary {
  std::vector<TaskReport> reports;  // sorted by (method, formulation, task)
  std::vector<std::pair<std::string, double>> gap_by_formulation;
  bool complete = true;
};

// Deterministic per-purpose seed derivation from the experiment seed.
std::uint64_t derive_seed(std::uint64_t base, const std::string& tag);

// Mean |a - b| over paired generalization errors; zero for identical methods.
double gap_statistic(const std::vector<std::pair<double, double>>& gen_pairs);

std::vector<std::string> output_dim_names(const data::Formulation& form);

// Fits STLSQ from scratch on the adaptation split; adaptation error is the
// in-sample fit, generalization the frozen fit on the eval split.
TaskRun run_sindy_task(const data::RegressionDataset& adapt_split,
                       const data::RegressionDataset& eval_split, const Config& cfg);

// Streams the adaptation split through online_adapt starting from meta_params,
// then evaluates the adapted parameters frozen on the eval split. A parameter
// hash taken before and after the generalization pass guards the freeze.
TaskRun run_learn_task(const model::LearnedModel& templ, const ParamSet& meta_params,
                       const data::RegressionDataset& adapt_split,
                       const data::RegressionDataset& eval_split, const Config& cfg);

struct CompareOptions {
  std::string out_dir = ".";
  std::vector<std::string> methods{"LeARN", "SINDy"};
  std::string paper_reference_path = "data/paper_reference.json";
  bool write_artifacts = true;
};

// The full protocol: simulate the wind tasks, meta-train per formulation, run
// every (method, formulation, eval task) cell, and emit tables_<formulation>.csv,
// summary.json, overlay/basis SVGs, and per-formulation train logs. Cell
// failures are recorded and the run continues.
ComparisonSummary compare_all(const Config& cfg, const CompareOptions& opts);

}  // namespace eval
}  // namespace learnsysid
