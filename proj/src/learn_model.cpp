#include "learnsysid/learn_model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace learnsysid {
namespace model {

MlpSpec BasisNet::spec(const data::Formulation& form) const {
  MlpSpec s;
  s.dims.push_back(mode == Mode::Elementwise ? 1 : form.width());
  s.dims.insert(s.dims.end(), hidden.begin(), hidden.end());
  s.dims.push_back(P);
  return s;
}

MlpSpec SelectorNet::spec(const data::Formulation& form, long W) const {
  MlpSpec s;
  s.dims.push_back(form.width());
  s.dims.insert(s.dims.end(), hidden.begin(), hidden.end());
  s.dims.push_back(form.I * W);
  return s;
}

long LearnedModel::theta_width() const {
  if (frozen_trig) return 2 * form.width();
  return basis.mode == BasisNet::Mode::Elementwise ? basis.P * form.width() : basis.P;
}

LearnedModel make_model(const data::Formulation& form, BasisNet::Mode mode, long P,
                        std::uint64_t seed) {
  if (P <= 0) throw std::invalid_argument("make_model: P must be positive");
  LearnedModel m;
  m.form = form;
  m.basis.mode = mode;
  m.basis.P = P;
  m.basis.psi = mlp_init(m.basis.spec(form), "basis", seed);
  m.sel.phi = mlp_init(m.sel.spec(form, m.theta_width()), "sel", seed ^ 0x9e3779b97f4a7c15ull);
  return m;
}

ad::Node* theta_forward_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                              ad::Node* Xn) {
  const long d = m.form.width();
  if (Xn->cols() != d)
    throw std::invalid_argument("theta_forward: input width " + std::to_string(Xn->cols()) +
                                " does not match formulation width " + std::to_string(d));
  if (m.frozen_trig)
    return ad::concat_cols(t, ad::unary(t, Xn, ad::UnaryFn::Sin), ad::unary(t, Xn, ad::UnaryFn::Cos));

  if (m.basis.mode == BasisNet::Mode::Vector)
    return mlp_forward(t, params, "basis", Xn, m.basis.spec(m.form));

  const long N = Xn->rows();
  const long P = m.basis.P;
  ad::Node* col = ad::reshape(t, Xn, N * d, 1);
  ad::Node* h = mlp_forward(t, params, "basis", col, m.basis.spec(m.form));
  ad::Node* per_feature = ad::reshape(t, h, N, d * P);  // feature-major j*P+p
  std::vector<int> perm(static_cast<std::size_t>(d * P));
  for (long p = 0; p < P; ++p)
    for (long j = 0; j < d; ++j)
      perm[static_cast<std::size_t>(p * d + j)] = static_cast<int>(j * P + p);
  return ad::permute_cols(t, per_feature, perm);
}

ad::Node* selector_flat_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                              ad::Node* Xn) {
  const long d = m.form.width();
  if (Xn->cols() != d)
    throw std::invalid_argument("selector_forward: input width " + std::to_string(Xn->cols()) +
                                " does not match formulation width " + std::to_string(d));
  return mlp_forward(t, params, "sel", Xn, m.sel.spec(m.form, m.theta_width()));
}

ad::Node* model_predict_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                              ad::Node* Xn) {
  ad::Node* theta = theta_forward_nodes(t, m, params, Xn);
  if (m.const_E) {
    if (m.const_E->rows() != m.form.I || m.const_E->cols() != m.theta_width())
      throw std::invalid_argument("model_predict: const E shape mismatch");
    return ad::matmul(t, theta, ad::transpose(t, ad::constant(t, *m.const_E)));
  }
  ad::Node* e_flat = selector_flat_nodes(t, m, params, Xn);
  return ad::bmm_rowwise(t, e_flat, theta);
}

ad::Node* task_loss_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                          ad::Node* Xn, ad::Node* Yn) {
  const long N = Xn->rows();
  if (N == 0) throw std::invalid_argument("task_loss: empty batch");
  if (Yn->rows() != N || Yn->cols() != m.form.I)
    throw std::invalid_argument("task_loss: target shape mismatch");
  ad::Node* r = ad::sub(t, model_predict_nodes(t, m, params, Xn), Yn);
  return ad::scalar_mul(t, ad::sum(t, ad::mul(t, r, r)), 1.0 / static_cast<double>(N));
}

ad::Node* adapt_loss_nodes(ad::Tape& t, const LearnedModel& m, const ad::NodeMap& params,
                           ad::Node* x, ad::Node* y, const Mat* f_prev, double lambda, double L) {
  if (lambda < 0.0 || L < 0.0)
    throw std::invalid_argument("adapt_loss: lambda and L must be non-negative");
  if (x->rows() != 1 || y->rows() != 1)
    throw std::invalid_argument("adapt_loss: expects a single sample");
  ad::Node* pred = model_predict_nodes(t, m, params, x);
  ad::Node* r = ad::sub(t, pred, y);
  ad::Node* loss = ad::sum(t, ad::mul(t, r, r));
  if (f_prev && lambda > 0.0) {
    if (f_prev->rows() != 1 || f_prev->cols() != m.form.I)
      throw std::invalid_argument("adapt_loss: f_prev shape mismatch");
    ad::Node* jump = ad::sub(t, pred, ad::constant(t, *f_prev));
    ad::Node* l1 = ad::sum(t, ad::unary(t, jump, ad::UnaryFn::Abs));
    ad::Node* hinge = ad::unary(t, ad::add_scalar(t, l1, -L), ad::UnaryFn::Relu);
    loss = ad::add(t, loss, ad::scalar_mul(t, hinge, lambda));
  }
  return loss;
}

Mat theta_forward(const LearnedModel& m, const Mat& Xn) {
  ad::Tape t;
  return theta_forward_nodes(t, m, make_leaves(t, collect_params(m)), ad::constant(t, Xn))->value;
}

Mat selector_forward(const LearnedModel& m, const Mat& x_row) {
  if (x_row.rows() != 1) throw std::invalid_argument("selector_forward: expects one row");
  ad::Tape t;
  ad::Node* flat = selector_flat_nodes(t, m, make_leaves(t, collect_params(m)), ad::constant(t, x_row));
  return Eigen::Map<const Mat>(flat->value.data(), m.form.I, m.theta_width());
}

Mat model_predict(const LearnedModel& m, const Mat& Xn) {
  ad::Tape t;
  return model_predict_nodes(t, m, make_leaves(t, collect_params(m)), ad::constant(t, Xn))->value;
}

double task_loss(const LearnedModel& m, const Mat& Xn, const Mat& Yn) {
  ad::Tape t;
  return task_loss_nodes(t, m, make_leaves(t, collect_params(m)), ad::constant(t, Xn),
                         ad::constant(t, Yn))
      ->value(0, 0);
}

ParamSet collect_params(const LearnedModel& m) {
  ParamSet out;
  for (const auto& [n, v] : m.basis.psi.entries()) out.add(n, v);
  for (const auto& [n, v] : m.sel.phi.entries()) out.add(n, v);
  return out;
}

void scatter_params(LearnedModel& m, const ParamSet& merged) {
  for (auto& [n, v] : m.basis.psi.entries()) v = merged.at(n);
  for (auto& [n, v] : m.sel.phi.entries()) v = merged.at(n);
}

namespace {
nlohmann::json rowvec_json(const Eigen::RowVectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::RowVectorXd rowvec_from(const nlohmann::json& a) {
  Eigen::RowVectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<long>(i)) = a[i].get<double>();
  return v;
}
}  // namespace

void save_model(const LearnedModel& m, const std::string& base) {
  collect_params(m).save(base + "_params");
  nlohmann::json j;
  j["format"] = "learnsysid-model-v1";
  j["mode"] = m.basis.mode == BasisNet::Mode::Elementwise ? "elementwise" : "vector";
  j["P"] = m.basis.P;
  j["basis_hidden"] = m.basis.hidden;
  j["sel_hidden"] = m.sel.hidden;
  j["formulation"] = {{"name", m.form.name}, {"I", m.form.I}, {"U", m.form.U}};
  j["lambda"] = m.lambda;
  j["lipschitz"] = std::isfinite(m.lipschitz) ? nlohmann::json(m.lipschitz) : nlohmann::json("inf");
  j["frozen_trig"] = m.frozen_trig;
  if (m.const_E) {
    nlohmann::json e;
    e["rows"] = m.const_E->rows();
    e["cols"] = m.const_E->cols();
    nlohmann::json vals = nlohmann::json::array();
    for (long i = 0; i < m.const_E->size(); ++i) vals.push_back(m.const_E->data()[i]);
    e["values"] = vals;
    j["const_E"] = e;
  }
  j["norm"] = {{"x_mean", rowvec_json(m.norm.x_mean)},
               {"x_std", rowvec_json(m.norm.x_std)},
               {"y_mean", rowvec_json(m.norm.y_mean)},
               {"y_std", rowvec_json(m.norm.y_std)}};
  std::ofstream out(base + ".json");
  if (!out) throw std::runtime_error("save_model: cannot write " + base + ".json");
  out << j.dump(2) << "\n";
}

LearnedModel load_model(const std::string& base) {
  std::ifstream in(base + ".json");
  if (!in) throw std::runtime_error("load_model: cannot read " + base + ".json");
  const nlohmann::json j = nlohmann::json::parse(in);
  if (j.value("format", "") != "learnsysid-model-v1")
    throw std::runtime_error("load_model: unknown format in " + base + ".json");

  LearnedModel m;
  const auto& f = j.at("formulation");
  const auto fname = f.at("name").get<std::string>();
  if (fname == "translational" || fname == "attitude" || fname == "full")
    m.form = data::formulation_by_name(fname);
  else
    m.form = data::custom(f.at("I").get<long>(), f.at("U").get<long>(), fname);

  m.basis.mode =
      j.at("mode").get<std::string>() == "vector" ? BasisNet::Mode::Vector : BasisNet::Mode::Elementwise;
  m.basis.P = j.at("P").get<long>();
  m.basis.hidden = j.at("basis_hidden").get<std::vector<long>>();
  m.sel.hidden = j.at("sel_hidden").get<std::vector<long>>();
  m.lambda = j.at("lambda").get<double>();
  m.lipschitz = j.at("lipschitz").is_string() ? std::numeric_limits<double>::infinity()
                                              : j.at("lipschitz").get<double>();
  m.frozen_trig = j.value("frozen_trig", false);
  if (j.contains("const_E")) {
    const auto& e = j.at("const_E");
    Mat E(e.at("rows").get<long>(), e.at("cols").get<long>());
    const auto& vals = e.at("values");
    for (long i = 0; i < E.size(); ++i) E.data()[i] = vals[static_cast<std::size_t>(i)].get<double>();
    m.const_E = std::move(E);
  }
  const auto& n = j.at("norm");
  m.norm.x_mean = rowvec_from(n.at("x_mean"));
  m.norm.x_std = rowvec_from(n.at("x_std"));
  m.norm.y_mean = rowvec_from(n.at("y_mean"));
  m.norm.y_std = rowvec_from(n.at("y_std"));

  const ParamSet merged = ParamSet::load(base + "_params");
  m.basis.psi = ParamSet();
  m.sel.phi = ParamSet();
  for (const auto& [name, value] : merged.entries()) {
    if (name.rfind("basis.", 0) == 0)
      m.basis.psi.add(name, value);
    else if (name.rfind("sel.", 0) == 0)
      m.sel.phi.add(name, value);
    else
      throw std::runtime_error("load_model: unexpected parameter '" + name + "'");
  }
  return m;
}

}  // namespace model
}  // namespace learnsysid
