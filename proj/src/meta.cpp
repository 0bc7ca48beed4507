#include "learnsysid/meta.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace learnsysid {
namespace meta {

namespace {

// Fisher-Yates with a plain modulo draw: std::shuffle's output is
// implementation-defined, this is not.
void shuffle_indices(std::vector<long>& idx, std::mt19937_64& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng() % i]);
}

Mat take_rows(const Mat& m, const std::vector<long>& idx, long begin, long count) {
  Mat out(count, m.cols());
  for (long k = 0; k < count; ++k) out.row(k) = m.row(idx[static_cast<std::size_t>(begin + k)]);
  return out;
}

}  // namespace

ad::NodeMap sgd_step_nodes(ad::Tape& t, const ad::NodeMap& params, const ad::NodeMap& grads,
                           double lr) {
  ad::NodeMap out;
  for (const auto& [name, p] : params) {
    auto g = grads.find(name);
    if (g == grads.end()) throw std::invalid_argument("sgd_step: missing gradient for '" + name + "'");
    out[name] = ad::sub(t, p, ad::scalar_mul(t, g->second, lr));
  }
  return out;
}

ad::NodeMap inner_adapt(ad::Tape& t, const model::LearnedModel& m, const ad::NodeMap& params,
                        ad::Node* Xs, ad::Node* Ys, double alpha, int n, bool second_order) {
  ad::NodeMap cur = params;
  for (int round = 0; round < n; ++round) {
    ad::Node* loss = model::task_loss_nodes(t, m, cur, Xs, Ys);
    ad::NodeMap grads = ad::backward(t, loss, cur, second_order);
    cur = sgd_step_nodes(t, cur, grads, alpha);
  }
  return cur;
}

MetaResult meta_train(const TaskSet& tasks, const model::LearnedModel& templ,
                      const MetaHyper& hyper) {
  if (tasks.tasks.empty()) throw std::invalid_argument("meta_train: no tasks");
  if (hyper.alpha <= 0.0 || hyper.beta < 0.0)
    throw std::invalid_argument("meta_train: need alpha > 0 and beta >= 0");
  if (hyper.n < 0) throw std::invalid_argument("meta_train: inner rounds must be >= 0");

  const long T = static_cast<long>(tasks.tasks.size());
  std::vector<Mat> Xn(tasks.tasks.size()), Yn(tasks.tasks.size());
  for (std::size_t i = 0; i < tasks.tasks.size(); ++i) {
    const auto& ds = tasks.tasks[i];
    if (ds.samples() < 2) throw std::invalid_argument("meta_train: task '" + ds.wind_label + "' too small");
    Xn[i] = normalize_x(ds.norm, ds.X);
    Yn[i] = normalize_y(ds.norm, ds.Y);
  }

  MetaResult res;
  res.params = model::collect_params(templ);
  std::mt19937_64 rng(hyper.seed);
  const auto t_start = std::chrono::steady_clock::now();

  model::LearnedModel m = templ;
  ad::Tape tape;
  for (long iter = 0; iter < hyper.outer_iters; ++iter) {
    tape.clear();
    ad::NodeMap leaves = make_leaves(tape, res.params);

    std::vector<long> chosen(static_cast<std::size_t>(T));
    for (long i = 0; i < T; ++i) chosen[static_cast<std::size_t>(i)] = i;
    if (hyper.meta_batch < T) {
      shuffle_indices(chosen, rng);
      chosen.resize(static_cast<std::size_t>(std::max<long>(1, hyper.meta_batch)));
      std::sort(chosen.begin(), chosen.end());
    }

    std::map<std::string, Mat> grad_sum;
    double support_sum = 0.0, query_sum = 0.0;
    for (long ti : chosen) {
      const Mat& X = Xn[static_cast<std::size_t>(ti)];
      const Mat& Y = Yn[static_cast<std::size_t>(ti)];
      const long N = X.rows();
      std::vector<long> idx(static_cast<std::size_t>(N));
      for (long i = 0; i < N; ++i) idx[static_cast<std::size_t>(i)] = i;
      shuffle_indices(idx, rng);
      const long s = std::max<long>(1, std::min(hyper.inner_batch, N / 2));
      const long q = std::max<long>(1, std::min(hyper.inner_batch, N - s));

      ad::Node* Xs = ad::constant(tape, take_rows(X, idx, 0, s));
      ad::Node* Ys = ad::constant(tape, take_rows(Y, idx, 0, s));
      ad::Node* Xq = ad::constant(tape, take_rows(X, idx, s, q));
      ad::Node* Yq = ad::constant(tape, take_rows(Y, idx, s, q));

      support_sum += model::task_loss_nodes(tape, m, leaves, Xs, Ys)->value(0, 0);
      ad::NodeMap adapted =
          inner_adapt(tape, m, leaves, Xs, Ys, hyper.alpha, hyper.n, hyper.second_order);
      ad::Node* qloss = model::task_loss_nodes(tape, m, adapted, Xq, Yq);
      query_sum += qloss->value(0, 0);

      ad::NodeMap grads = ad::backward(tape, qloss, leaves, false);
      for (const auto& [name, g] : grads) {
        auto it = grad_sum.find(name);
        if (it == grad_sum.end())
          grad_sum.emplace(name, g->value);
        else
          it->second += g->value;
      }
    }

    const double mean_query = query_sum / static_cast<double>(chosen.size());
    if (!std::isfinite(mean_query) || mean_query > 1e6)
      throw std::runtime_error("meta_train: diverged at iteration " + std::to_string(iter) +
                               " (mean query loss " + std::to_string(mean_query) + ")");

    for (auto& [name, value] : res.params.entries()) {
      Mat step = grad_sum.at(name);
      if (hyper.mu_meta != 0.0) step += 2.0 * hyper.mu_meta * value;
      value -= hyper.beta * step;
    }

    TrainLogRow row;
    row.iter = iter;
    row.support_loss = support_sum / static_cast<double>(chosen.size());
    row.query_loss = mean_query;
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    res.log.push_back(row);

    if (hyper.checkpoint_every > 0 && (iter + 1) % hyper.checkpoint_every == 0 &&
        !hyper.checkpoint_base.empty())
      res.params.save(hyper.checkpoint_base + "_" + std::to_string(iter + 1));
  }
  return res;
}

void write_train_log(const std::string& path, const std::vector<TrainLogRow>& log,
                     bool include_wall_ms) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_train_log: cannot open " + path);
  out << (include_wall_ms ? "iter,support_loss,query_loss,wall_ms\n"
                          : "iter,support_loss,query_loss\n");
  char buf[128];
  for (const auto& r : log) {
    if (include_wall_ms)
      std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.3f\n", r.iter, r.support_loss,
                    r.query_loss, r.wall_ms);
    else
      std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g\n", r.iter, r.support_loss, r.query_loss);
    out << buf;
  }
}

OnlineResult online_adapt(const model::LearnedModel& templ, const ParamSet& init,
                          const data::RegressionDataset& stream, const AdaptHyper& hyper) {
  if (hyper.rate <= 0.0) throw std::invalid_argument("online_adapt: rate must be positive");
  if (hyper.steps < 0) throw std::invalid_argument("online_adapt: steps must be >= 0");
  const long N = stream.samples();
  if (N == 0) throw std::invalid_argument("online_adapt: empty stream");

  const model::LearnedModel& m = templ;
  const Mat Xn = normalize_x(stream.norm, stream.X);
  const Mat Yn = normalize_y(stream.norm, stream.Y);

  OnlineResult res;
  res.params = init;
  res.predictions.resize(N, m.form.I);

  Mat f_prev;
  double se = 0.0;
  ad::Tape tape;
  for (long i = 0; i < N; ++i) {
    const Mat xi = Xn.row(i);
    const Mat yi = Yn.row(i);
    {
      tape.clear();
      ad::NodeMap leaves = make_leaves(tape, res.params);
      ad::Node* pred = model::model_predict_nodes(tape, m, leaves, ad::constant(tape, xi));
      res.predictions.row(i) = pred->value.row(0);
      se += (pred->value - yi).squaredNorm();
    }
    for (int step = 0; step < hyper.steps; ++step) {
      tape.clear();
      ad::NodeMap leaves = make_leaves(tape, res.params);
      ad::Node* loss = model::adapt_loss_nodes(tape, m, leaves, ad::constant(tape, xi),
                                               ad::constant(tape, yi), i > 0 ? &f_prev : nullptr,
                                               hyper.lambda, hyper.lipschitz);
      if (!std::isfinite(loss->value(0, 0)))
        throw std::runtime_error("online_adapt: non-finite loss at step " + std::to_string(i));
      ad::NodeMap grads = ad::backward(tape, loss, leaves, false);
      for (auto& [name, value] : res.params.entries()) value -= hyper.rate * grads.at(name)->value;
    }
    f_prev = res.predictions.row(i);
  }
  res.adapt_error = se / static_cast<double>(N);

  {
    tape.clear();
    ad::NodeMap leaves = make_leaves(tape, res.params);
    ad::Node* pred = model::model_predict_nodes(tape, m, leaves, ad::constant(tape, Xn));
    res.posthoc_error = mse_sum_dims(pred->value, Yn);
  }
  return res;
}

double evaluate_generalization(const model::LearnedModel& templ, const ParamSet& params,
                               const data::RegressionDataset& eval_split) {
  model::LearnedModel m = templ;
  model::scatter_params(m, params);
  const Mat pred = model::model_predict(m, normalize_x(eval_split.norm, eval_split.X));
  return mse_sum_dims(pred, normalize_y(eval_split.norm, eval_split.Y));
}

double mse_sum_dims(const Mat& pred, const Mat& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw std::invalid_argument("mse_sum_dims: shape mismatch");
  if (pred.rows() == 0) throw std::invalid_argument("mse_sum_dims: empty");
  return (pred - truth).squaredNorm() / static_cast<double>(pred.rows());
}

}  // namespace meta
}  // namespace learnsysid
