#include "learnsysid/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "learnsysid/dataio.hpp"
#include "learnsysid/quadsim.hpp"
#include "learnsysid/sindy.hpp"
#include "learnsysid/svg.hpp"

namespace learnsysid {
namespace eval {

namespace {

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct PaperRef {
  // formulation -> method -> task -> {adaptation, generalization}
  std::map<std::string, std::map<std::string, std::map<std::string, std::pair<double, double>>>>
      tables;
  std::map<std::string, double> gaps;
  bool loaded = false;
};

PaperRef load_paper_reference(const std::string& path) {
  PaperRef ref;
  std::ifstream in(path);
  if (!in) return ref;
  nlohmann::json j = nlohmann::json::parse(in);
  for (const auto& [form, methods] : j.at("tables").items())
    for (const auto& [method, tasks] : methods.items())
      for (const auto& [task, pair] : tasks.items())
        ref.tables[form][method][task] = {pair.at(0).get<double>(), pair.at(1).get<double>()};
  for (const auto& [form, gap] : j.at("gaps").items()) ref.gaps[form] = gap.get<double>();
  ref.loaded = true;
  return ref;
}

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, const std::string& tag) {
  std::uint64_t h = 14695981039346656037ull ^ base;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

double gap_statistic(const std::vector<std::pair<double, double>>& gen_pairs) {
  if (gen_pairs.empty()) throw std::invalid_argument("gap_statistic: no task pairs");
  double acc = 0.0;
  for (const auto& [a, b] : gen_pairs) acc += std::abs(a - b);
  return acc / static_cast<double>(gen_pairs.size());
}

std::vector<std::string> output_dim_names(const data::Formulation& form) {
  switch (form.tag) {
    case data::FormTag::Translational:
      return {"dvx", "dvy", "dvz"};
    case data::FormTag::Attitude:
      return {"dwx", "dwy", "dwz"};
    case data::FormTag::Full:
      return {"dvx", "dvy", "dvz", "dwx", "dwy", "dwz"};
    case data::FormTag::Custom:
      break;
  }
  std::vector<std::string> names;
  for (long i = 0; i < form.I; ++i) names.push_back("y" + std::to_string(i));
  return names;
}

TaskRun run_sindy_task(const data::RegressionDataset& adapt_split,
                       const data::RegressionDataset& eval_split, const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  TaskRun run;
  run.report.method = "SINDy";
  run.report.formulation = adapt_split.form.name;
  run.report.wind_label = adapt_split.wind_label;
  run.report.config_hash = config_hash(cfg);

  sindy::FixedLibrary lib;
  sindy::SparseModel model =
      sindy::sindy_fit(adapt_split, lib, cfg.sindy_threshold, cfg.sindy_ridge, cfg.sindy_max_iters);

  run.adapt_pred = normalize_y(model.norm, sindy_predict(model, adapt_split.X));
  run.gen_pred = normalize_y(model.norm, sindy_predict(model, eval_split.X));
  const Mat adapt_truth = normalize_y(model.norm, adapt_split.Y);
  const Mat gen_truth = normalize_y(model.norm, eval_split.Y);
  if (cfg.raw_units) {
    run.report.adapt_error =
        meta::mse_sum_dims(denormalize_y(model.norm, run.adapt_pred), adapt_split.Y);
    run.report.gen_error =
        meta::mse_sum_dims(denormalize_y(model.norm, run.gen_pred), eval_split.Y);
  } else {
    run.report.adapt_error = meta::mse_sum_dims(run.adapt_pred, adapt_truth);
    run.report.gen_error = meta::mse_sum_dims(run.gen_pred, gen_truth);
  }
  run.report.posthoc_error = run.report.adapt_error;
  run.report.runtime_s = elapsed_s(t0);
  return run;
}

TaskRun run_learn_task(const model::LearnedModel& templ, const ParamSet& meta_params,
                       const data::RegressionDataset& adapt_split,
                       const data::RegressionDataset& eval_split, const Config& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  TaskRun run;
  run.report.method = "LeARN";
  run.report.formulation = adapt_split.form.name;
  run.report.wind_label = adapt_split.wind_label;
  run.report.config_hash = config_hash(cfg);

  meta::OnlineResult online = meta::online_adapt(templ, meta_params, adapt_split,
                                                 adapt_hyper_from(cfg));
  run.adapt_pred = online.predictions;
  run.report.posthoc_error = online.posthoc_error;

  // Generalization must not move the parameters.
  const std::uint64_t frozen = param_hash(online.params);
  model::LearnedModel m = templ;
  model::scatter_params(m, online.params);
  run.gen_pred = model::model_predict(m, normalize_x(eval_split.norm, eval_split.X));
  const double gen_norm = meta::mse_sum_dims(run.gen_pred, normalize_y(eval_split.norm, eval_split.Y));
  if (param_hash(online.params) != frozen)
    throw std::logic_error("run_learn_task: parameters changed during generalization pass");

  if (cfg.raw_units) {
    run.report.adapt_error =
        meta::mse_sum_dims(denormalize_y(adapt_split.norm, run.adapt_pred), adapt_split.Y);
    run.report.gen_error =
        meta::mse_sum_dims(denormalize_y(eval_split.norm, run.gen_pred), eval_split.Y);
  } else {
    run.report.adapt_error = online.adapt_error;
    run.report.gen_error = gen_norm;
  }
  run.report.runtime_s = elapsed_s(t0);
  return run;
}

namespace {

struct EvalTask {
  data::RegressionDataset full;
  data::RegressionDataset adapt_split;
  data::RegressionDataset eval_split;
};

void write_tables_csv(const std::string& path, const std::vector<TaskReport>& reports,
                      const std::string& form_name, const PaperRef& ref) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("compare: cannot write " + path);
  out << "method,task,adaptation_error,generalization_error,ref_adaptation,ref_generalization,"
         "status,config_hash,message\n";
  for (const auto& r : reports) {
    if (r.formulation != form_name) continue;
    out << r.method << ',' << r.wind_label << ',';
    if (r.ok)
      out << num17(r.adapt_error) << ',' << num17(r.gen_error) << ',';
    else
      out << ",,";
    const auto fit = ref.tables.find(form_name);
    bool wrote_ref = false;
    if (fit != ref.tables.end()) {
      const auto mit = fit->second.find(r.method);
      if (mit != fit->second.end()) {
        const auto tit = mit->second.find(r.wind_label);
        if (tit != mit->second.end()) {
          out << num17(tit->second.first) << ',' << num17(tit->second.second);
          wrote_ref = true;
        }
      }
    }
    if (!wrote_ref) out << ',';
    out << ',' << (r.ok ? "ok" : "error") << ',' << hash_hex(r.config_hash) << ','
        << sanitize(r.error) << '\n';
  }
}

}  // namespace

ComparisonSummary compare_all(const Config& cfg, const CompareOptions& opts) {
  const std::vector<std::string> form_names = split_csv_list(cfg.formulations);
  if (form_names.empty()) throw std::invalid_argument("compare: no formulations configured");
  for (const auto& m : opts.methods)
    if (m != "SINDy" && m != "LeARN")
      throw std::invalid_argument("compare: unknown method " + m);
  if (opts.write_artifacts) std::filesystem::create_directories(opts.out_dir);
  const PaperRef ref = load_paper_reference(opts.paper_reference_path);
  const bool want_learn =
      std::find(opts.methods.begin(), opts.methods.end(), "LeARN") != opts.methods.end();
  const bool want_sindy =
      std::find(opts.methods.begin(), opts.methods.end(), "SINDy") != opts.methods.end();

  // One trajectory per wind condition, shared across formulations.
  std::map<std::string, sim::Trajectory> trajs;
  for (const auto& w : sim::training_wind_conditions())
    trajs[w.label] = sim::generate_trajectory(w, cfg.sim, cfg.quad,
                                              derive_seed(cfg.seed, "sim." + w.label));
  for (const auto& w : sim::evaluation_wind_conditions())
    trajs[w.label] = sim::generate_trajectory(w, cfg.sim, cfg.quad,
                                              derive_seed(cfg.seed, "sim." + w.label));

  ComparisonSummary summary;
  nlohmann::json jforms;

  for (const auto& form_name : form_names) {
    const data::Formulation form = data::formulation_by_name(form_name);
    data::FeatureOptions fopts;
    fopts.smooth_window = cfg.smooth_window;

    meta::TaskSet train;
    for (const auto& w : sim::training_wind_conditions()) {
      fopts.wind_label = w.label;
      train.tasks.push_back(data::build_features(trajs.at(w.label), form, fopts));
    }
    std::vector<EvalTask> evals;
    for (const auto& w : sim::evaluation_wind_conditions()) {
      fopts.wind_label = w.label;
      EvalTask et;
      et.full = data::build_features(trajs.at(w.label), form, fopts);
      auto [a, e] = data::split_task(et.full, cfg.adapt_fraction);
      et.adapt_split = std::move(a);
      et.eval_split = std::move(e);
      evals.push_back(std::move(et));
    }

    model::LearnedModel templ;
    ParamSet meta_params;
    if (want_learn) {
      const auto mode = cfg.learn_mode == "vector" ? model::BasisNet::Mode::Vector
                                                   : model::BasisNet::Mode::Elementwise;
      templ = model::make_model(form, mode, cfg.P, derive_seed(cfg.seed, "model." + form_name));
      templ.lambda = cfg.lambda;
      templ.lipschitz = cfg.lipschitz;
      templ.norm = train.tasks.front().norm;
      meta::MetaHyper mh = cfg.meta;
      mh.seed = derive_seed(cfg.seed, "meta." + form_name);
      if (mh.checkpoint_every > 0 && opts.write_artifacts)
        mh.checkpoint_base = opts.out_dir + "/meta_" + form_name;
      meta::MetaResult mr = meta_train(train, templ, mh);
      meta_params = std::move(mr.params);
      if (opts.write_artifacts) {
        meta::write_train_log(opts.out_dir + "/train_log_" + form_name + ".csv", mr.log, false);
        model::LearnedModel trained = templ;
        model::scatter_params(trained, meta_params);
        plot::plot_basis(trained, -M_PI, M_PI, 629, opts.out_dir + "/basis_" + form_name);
      }
    }

    const std::vector<std::string> dims = output_dim_names(form);
    for (const auto& et : evals) {
      for (const auto& method : opts.methods) {
        TaskRun run;
        try {
          if (method == "SINDy" && want_sindy)
            run = run_sindy_task(et.adapt_split, et.eval_split, cfg);
          else if (method == "LeARN" && want_learn)
            run = run_learn_task(templ, meta_params, et.adapt_split, et.eval_split, cfg);
          else
            continue;
        } catch (const std::exception& e) {
          run.report.method = method;
          run.report.formulation = form_name;
          run.report.wind_label = et.full.wind_label;
          run.report.config_hash = config_hash(cfg);
          run.report.ok = false;
          run.report.error = e.what();
          summary.complete = false;
        }
        if (run.report.ok && opts.write_artifacts) {
          const Normalization& norm = et.adapt_split.norm;
          const Mat truth = cfg.plot_normalized ? normalize_y(norm, et.full.Y) : et.full.Y;
          const Mat ap = cfg.plot_normalized ? run.adapt_pred : denormalize_y(norm, run.adapt_pred);
          const Mat gp = cfg.plot_normalized ? run.gen_pred : denormalize_y(norm, run.gen_pred);
          for (long d = 0; d < form.I; ++d) {
            const std::string path = opts.out_dir + "/overlay_" + method + "_" +
                                     et.full.wind_label + "_" + dims[static_cast<std::size_t>(d)] +
                                     ".svg";
            plot::plot_overlay(truth.col(d), ap.col(d), gp.col(d), path,
                               {dims[static_cast<std::size_t>(d)]});
          }
        }
        summary.reports.push_back(run.report);
      }
    }
  }

  std::sort(summary.reports.begin(), summary.reports.end(),
            [](const TaskReport& a, const TaskReport& b) {
              return std::tie(a.method, a.formulation, a.wind_label) <
                     std::tie(b.method, b.formulation, b.wind_label);
            });

  // Gap statistic per formulation: mean |gen_LeARN - gen_SINDy| over eval tasks.
  for (const auto& form_name : form_names) {
    std::map<std::string, double> learn_gen, sindy_gen;
    bool all_ok = want_learn && want_sindy;
    for (const auto& r : summary.reports) {
      if (r.formulation != form_name) continue;
      if (!r.ok) {
        all_ok = false;
        continue;
      }
      (r.method == "LeARN" ? learn_gen : sindy_gen)[r.wind_label] = r.gen_error;
    }
    if (!all_ok || learn_gen.size() != sindy_gen.size() || learn_gen.empty()) continue;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& [task, g] : learn_gen) pairs.emplace_back(g, sindy_gen.at(task));
    summary.gap_by_formulation.emplace_back(form_name, gap_statistic(pairs));
  }

  if (opts.write_artifacts) {
    for (const auto& form_name : form_names)
      write_tables_csv(opts.out_dir + "/tables_" + form_name + ".csv", summary.reports, form_name,
                       ref);

    nlohmann::json j;
    j["config_hash"] = hash_hex(config_hash(cfg));
    j["complete"] = summary.complete;
    j["units"] = cfg.raw_units ? "raw" : "normalized";
    j["conventions"] =
        "Errors are squared residuals summed over output dimensions and averaged over samples, "
        "on targets normalized with adaptation-split statistics (raw units when units=raw). "
        "LeARN adaptation errors are prequential: each sample is predicted before any update. "
        "SINDy adaptation errors are the in-sample fit on the adaptation split. Generalization "
        "errors use frozen parameters on the held-out suffix.";
    for (const auto& form_name : form_names) {
      nlohmann::json jf;
      for (const auto& [name, gap] : summary.gap_by_formulation)
        if (name == form_name) jf["gap"] = gap;
      if (ref.loaded && ref.gaps.count(form_name)) jf["reference_gap"] = ref.gaps.at(form_name);
      nlohmann::json jtasks;
      for (const auto& r : summary.reports) {
        if (r.formulation != form_name) continue;
        nlohmann::json cell;
        if (r.ok) {
          cell["adaptation_error"] = r.adapt_error;
          cell["generalization_error"] = r.gen_error;
          if (r.method == "LeARN") cell["posthoc_error"] = r.posthoc_error;
        } else {
          cell["error"] = r.error;
        }
        jtasks[r.wind_label][r.method] = cell;
      }
      jf["tasks"] = jtasks;
      jforms[form_name] = jf;
    }
    j["formulations"] = jforms;
    std::ofstream out(opts.out_dir + "/summary.json");
    if (!out) throw std::runtime_error("compare: cannot write summary.json");
    out << j.dump(2) << "\n";
  }
  return summary;
}

}  // namespace eval
}  // namespace learnsysid
