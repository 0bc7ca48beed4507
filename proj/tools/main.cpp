#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "learnsysid/config.hpp"
#include "learnsysid/dataio.hpp"
#include "learnsysid/experiments.hpp"
#include "learnsysid/meta.hpp"
#include "learnsysid/quadsim.hpp"
#include "learnsysid/svg.hpp"

namespace ls = learnsysid;

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool raw_units = false;
};

ls::eval::Config resolve_config(const GlobalArgs& g) {
  ls::eval::Config cfg;
  if (!g.config_path.empty()) cfg = ls::eval::load_config(g.config_path);
  if (g.seed_set) {
    cfg.seed = g.seed;
    cfg.meta.seed = g.seed;
  }
  if (g.raw_units) cfg.raw_units = true;
  return cfg;
}

ls::data::RegressionDataset simulate_task(const ls::eval::Config& cfg, const std::string& wind_label,
                                          const ls::data::Formulation& form) {
  const ls::sim::WindCondition wind = ls::sim::wind_condition_by_label(wind_label);
  const ls::sim::Trajectory traj = ls::sim::generate_trajectory(
      wind, cfg.sim, cfg.quad, ls::eval::derive_seed(cfg.seed, "sim." + wind.label));
  ls::data::FeatureOptions fopts;
  fopts.smooth_window = cfg.smooth_window;
  fopts.wind_label = wind.label;
  return ls::data::build_features(traj, form, fopts);
}

void print_report(const ls::eval::TaskReport& r) {
  std::printf("%-6s %-14s %-9s adaptation %.6f  generalization %.6f  (%.2fs)\n",
              r.method.c_str(), r.formulation.c_str(), r.wind_label.c_str(), r.adapt_error,
              r.gen_error, r.runtime_s);
}

int cmd_simulate(const GlobalArgs& g, const std::string& wind_label) {
  const ls::eval::Config cfg = resolve_config(g);
  const ls::sim::WindCondition wind = ls::sim::wind_condition_by_label(wind_label);
  const std::uint64_t seed = ls::eval::derive_seed(cfg.seed, "sim." + wind.label);
  const ls::sim::Trajectory traj = ls::sim::generate_trajectory(wind, cfg.sim, cfg.quad, seed);
  std::filesystem::create_directories(g.out_dir);
  const std::string base = g.out_dir + "/trajectory_" + wind.label;
  ls::sim::write_trajectory_csv(base + ".csv", traj);
  ls::sim::write_trajectory_meta(base + ".meta.json", wind, cfg.sim, cfg.quad, seed);
  std::printf("wrote %s.csv (%ld samples) and %s.meta.json\n", base.c_str(), traj.samples(),
              base.c_str());
  return 0;
}

int cmd_meta_train(const GlobalArgs& g, const std::string& form_name) {
  const ls::eval::Config cfg = resolve_config(g);
  const ls::data::Formulation form = ls::data::formulation_by_name(form_name);
  ls::meta::TaskSet train;
  for (const auto& w : ls::sim::training_wind_conditions())
    train.tasks.push_back(simulate_task(cfg, w.label, form));

  const auto mode = cfg.learn_mode == "vector" ? ls::model::BasisNet::Mode::Vector
                                               : ls::model::BasisNet::Mode::Elementwise;
  ls::model::LearnedModel templ = ls::model::make_model(
      form, mode, cfg.P, ls::eval::derive_seed(cfg.seed, "model." + form_name));
  templ.lambda = cfg.lambda;
  templ.lipschitz = cfg.lipschitz;
  templ.norm = train.tasks.front().norm;

  ls::meta::MetaHyper mh = cfg.meta;
  mh.seed = ls::eval::derive_seed(cfg.seed, "meta." + form_name);
  std::filesystem::create_directories(g.out_dir);
  if (mh.checkpoint_every > 0) mh.checkpoint_base = g.out_dir + "/meta_" + form_name;
  ls::meta::MetaResult mr = ls::meta::meta_train(train, templ, mh);

  ls::model::scatter_params(templ, mr.params);
  const std::string base = g.out_dir + "/model_" + form_name;
  ls::model::save_model(templ, base);
  ls::meta::write_train_log(g.out_dir + "/train_log_" + form_name + ".csv", mr.log, true);
  std::printf("meta-trained %s over %zu tasks, %ld outer iterations; model at %s.json\n",
              form_name.c_str(), train.tasks.size(), cfg.meta.outer_iters, base.c_str());
  if (!mr.log.empty())
    std::printf("final support loss %.6f, query loss %.6f\n", mr.log.back().support_loss,
                mr.log.back().query_loss);
  return 0;
}

int cmd_adapt(const GlobalArgs& g, const std::string& model_base, const std::string& wind_label) {
  const ls::eval::Config cfg = resolve_config(g);
  ls::model::LearnedModel m = ls::model::load_model(model_base);
  const ls::data::RegressionDataset task = simulate_task(cfg, wind_label, m.form);
  auto [adapt_split, eval_split] = ls::data::split_task(task, cfg.adapt_fraction);

  ls::eval::TaskRun run =
      ls::eval::run_learn_task(m, ls::model::collect_params(m), adapt_split, eval_split, cfg);
  print_report(run.report);

  std::filesystem::create_directories(g.out_dir);
  const ls::Normalization& norm = adapt_split.norm;
  const ls::Mat truth = cfg.plot_normalized ? normalize_y(norm, task.Y) : task.Y;
  const ls::Mat ap = cfg.plot_normalized ? run.adapt_pred : denormalize_y(norm, run.adapt_pred);
  const ls::Mat gp = cfg.plot_normalized ? run.gen_pred : denormalize_y(norm, run.gen_pred);
  ls::plot::plot_overlay(truth, ap, gp, g.out_dir + "/overlay_LeARN_" + wind_label + ".svg",
                         ls::eval::output_dim_names(m.form));
  return 0;
}

int cmd_eval(const GlobalArgs& g, const std::string& model_base, const std::string& wind_label) {
  const ls::eval::Config cfg = resolve_config(g);
  ls::model::LearnedModel m = ls::model::load_model(model_base);
  const ls::data::RegressionDataset task = simulate_task(cfg, wind_label, m.form);
  auto [adapt_split, eval_split] = ls::data::split_task(task, cfg.adapt_fraction);
  const double err =
      ls::meta::evaluate_generalization(m, ls::model::collect_params(m), eval_split);
  std::printf("frozen %s on %s eval split: generalization %.6f (normalized units)\n",
              m.form.name.c_str(), wind_label.c_str(), err);
  return 0;
}

int cmd_compare(const GlobalArgs& g, const std::string& reference_path) {
  const ls::eval::Config cfg = resolve_config(g);
  ls::eval::CompareOptions opts;
  opts.out_dir = g.out_dir;
  opts.paper_reference_path = reference_path;
  const ls::eval::ComparisonSummary summary = ls::eval::compare_all(cfg, opts);
  for (const auto& r : summary.reports) {
    if (r.ok)
      print_report(r);
    else
      std::printf("%-6s %-14s %-9s FAILED: %s\n", r.method.c_str(), r.formulation.c_str(),
                  r.wind_label.c_str(), r.error.c_str());
  }
  for (const auto& [form, gap] : summary.gap_by_formulation)
    std::printf("gap %-14s %.6f\n", form.c_str(), gap);
  std::printf("artifacts in %s (%s)\n", g.out_dir.c_str(),
              summary.complete ? "complete" : "INCOMPLETE");
  return summary.complete ? 0 : 2;
}

int cmd_plot_basis(const GlobalArgs& g, const std::string& model_base, double lo, double hi,
                   int samples) {
  ls::model::LearnedModel m = ls::model::load_model(model_base);
  std::filesystem::create_directories(g.out_dir);
  ls::plot::plot_basis(m, lo, hi, samples, g.out_dir + "/basis");
  std::printf("wrote %s/basis.csv and %s/basis.svg\n", g.out_dir.c_str(), g.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"System identification toolkit: SINDy and meta-learned basis libraries on "
               "simulated quadrotor wind tasks"};
  app.require_subcommand(1);

  GlobalArgs g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--config", g.config_path, "Config file (.toml or .json)");
  app.add_option("--out-dir", g.out_dir, "Artifact directory")->capture_default_str();
  app.add_flag("--raw-units", g.raw_units, "Report errors in raw target units");

  auto* sim_cmd = app.add_subcommand("simulate", "Generate one wind-task trajectory");
  std::string wind_label;
  sim_cmd->add_option("--wind", wind_label, "Wind condition label, e.g. 100wind")->required();

  auto* train_cmd = app.add_subcommand("meta-train", "Meta-train a model on the training winds");
  std::string form_name = "translational";
  train_cmd->add_option("--formulation", form_name, "translational, attitude, or full")
      ->capture_default_str();

  auto* adapt_cmd = app.add_subcommand("adapt", "Online-adapt a model on one eval wind task");
  std::string model_base;
  adapt_cmd->add_option("--model", model_base, "Model base path (no extension)")->required();
  adapt_cmd->add_option("--wind", wind_label, "Wind condition label")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a frozen model on one eval wind task");
  eval_cmd->add_option("--model", model_base, "Model base path (no extension)")->required();
  eval_cmd->add_option("--wind", wind_label, "Wind condition label")->required();

  auto* cmp_cmd = app.add_subcommand("compare", "Run the full method comparison");
  std::string reference_path = "data/paper_reference.json";
  cmp_cmd->add_option("--reference", reference_path, "Reference table for display columns")
      ->capture_default_str();

  auto* basis_cmd = app.add_subcommand("plot-basis", "Plot learned basis functions");
  double lo = -M_PI, hi = M_PI;
  int samples = 629;
  basis_cmd->add_option("--model", model_base, "Model base path (no extension)")->required();
  basis_cmd->add_option("--lo", lo, "Grid start")->capture_default_str();
  basis_cmd->add_option("--hi", hi, "Grid end")->capture_default_str();
  basis_cmd->add_option("--samples", samples, "Grid size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  g.seed_set = seed_opt->count() > 0;

  // Config problems are usage errors; anything later is a runtime failure.
  try {
    resolve_config(g);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sim_cmd->parsed()) return cmd_simulate(g, wind_label);
    if (train_cmd->parsed()) return cmd_meta_train(g, form_name);
    if (adapt_cmd->parsed()) return cmd_adapt(g, model_base, wind_label);
    if (eval_cmd->parsed()) return cmd_eval(g, model_base, wind_label);
    if (cmp_cmd->parsed()) return cmd_compare(g, reference_path);
    if (basis_cmd->parsed()) return cmd_plot_basis(g, model_base, lo, hi, samples);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
