#include "learnsysid/autodiff.hpp"

#include <cmath>
#include <stdexcept>

#include "learnsysid/special_functions.hpp"

namespace learnsysid {
namespace ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Mat& a, const Mat& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              " and " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
}

const char* unary_name(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Gelu: return "gelu";
    case UnaryFn::GeluD1: return "gelu_d1";
    case UnaryFn::GeluD2: return "gelu_d2";
    case UnaryFn::GeluD3: return "gelu_d3";
    case UnaryFn::GeluD4: return "gelu_d4";
    case UnaryFn::Abs: return "abs";
    case UnaryFn::Sign: return "sign";
    case UnaryFn::Relu: return "relu";
    case UnaryFn::Step: return "step";
    case UnaryFn::Sin: return "sin";
    case UnaryFn::Cos: return "cos";
    case UnaryFn::NegSin: return "neg_sin";
    case UnaryFn::NegCos: return "neg_cos";
    case UnaryFn::Zero: return "zero";
  }
  return "?";
}

double apply_unary(UnaryFn fn, double x) {
  switch (fn) {
    case UnaryFn::Gelu: return gelu(x);
    case UnaryFn::GeluD1: return gelu_d1(x);
    case UnaryFn::GeluD2: return gelu_d2(x);
    case UnaryFn::GeluD3: return gelu_d3(x);
    case UnaryFn::GeluD4: return gelu_d4(x);
    case UnaryFn::Abs: return std::fabs(x);
    case UnaryFn::Sign: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case UnaryFn::Relu: return x > 0.0 ? x : 0.0;
    case UnaryFn::Step: return x > 0.0 ? 1.0 : 0.0;
    case UnaryFn::Sin: return std::sin(x);
    case UnaryFn::Cos: return std::cos(x);
    case UnaryFn::NegSin: return -std::sin(x);
    case UnaryFn::NegCos: return -std::cos(x);
    case UnaryFn::Zero: return 0.0;
  }
  return 0.0;
}

bool is_gelu_family(UnaryFn fn) {
  return fn == UnaryFn::Gelu || fn == UnaryFn::GeluD1 || fn == UnaryFn::GeluD2 ||
         fn == UnaryFn::GeluD3 || fn == UnaryFn::GeluD4;
}

Node* link1(Tape& t, Mat value, Op op, Node* a) {
  Node* n = t.make(std::move(value), op);
  n->parent[0] = a;
  n->arity = 1;
  n->needs_grad = a->needs_grad;
  return n;
}

Node* link2(Tape& t, Mat value, Op op, Node* a, Node* b) {
  Node* n = t.make(std::move(value), op);
  n->parent[0] = a;
  n->parent[1] = b;
  n->arity = 2;
  n->needs_grad = a->needs_grad || b->needs_grad;
  return n;
}

std::vector<int> inverse_perm(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t j = 0; j < perm.size(); ++j) inv[static_cast<std::size_t>(perm[j])] = static_cast<int>(j);
  return inv;
}

}  // namespace

Node* Tape::make(Mat value, Op op) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  n->op = op;
  n->index = static_cast<int>(nodes_.size());
  Node* raw = n.get();
  nodes_.push_back(std::move(n));
  return raw;
}

void Tape::clear() { nodes_.clear(); }

Node* leaf(Tape& t, const Mat& value, const std::string& name) {
  Node* n = t.make(value, Op::Leaf);
  n->needs_grad = true;
  n->name = name;
  return n;
}

Node* constant(Tape& t, const Mat& value) { return t.make(value, Op::Constant); }

Node* constant_scalar(Tape& t, double value) {
  Mat m(1, 1);
  m(0, 0) = value;
  return constant(t, m);
}

Node* add(Tape& t, Node* a, Node* b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("add", a->value, b->value);
  return link2(t, a->value + b->value, Op::Add, a, b);
}

Node* add_rowvec(Tape& t, Node* a, Node* row) {
  if (row->rows() != 1 || row->cols() != a->cols()) shape_error("add_rowvec", a->value, row->value);
  Mat out = a->value;
  out.rowwise() += row->value.row(0);
  return link2(t, std::move(out), Op::AddRowVec, a, row);
}

Node* add_scalar(Tape& t, Node* a, double s) {
  Node* n = link1(t, a->value.array() + s, Op::AddScalar, a);
  n->scalar = s;
  return n;
}

Node* sub(Tape& t, Node* a, Node* b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("sub", a->value, b->value);
  return link2(t, a->value - b->value, Op::Sub, a, b);
}

Node* neg(Tape& t, Node* a) { return link1(t, -a->value, Op::Neg, a); }

Node* mul(Tape& t, Node* a, Node* b) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) shape_error("mul", a->value, b->value);
  return link2(t, a->value.cwiseProduct(b->value), Op::Mul, a, b);
}

Node* scalar_mul(Tape& t, Node* a, double s) {
  Node* n = link1(t, a->value * s, Op::ScalarMul, a);
  n->scalar = s;
  return n;
}

Node* matmul(Tape& t, Node* a, Node* b) {
  if (a->cols() != b->rows()) shape_error("matmul", a->value, b->value);
  return link2(t, a->value * b->value, Op::MatMul, a, b);
}

Node* transpose(Tape& t, Node* a) { return link1(t, a->value.transpose(), Op::Transpose, a); }

Node* sum(Tape& t, Node* a) {
  Mat out(1, 1);
  out(0, 0) = a->value.sum();
  return link1(t, std::move(out), Op::Sum, a);
}

Node* colsum(Tape& t, Node* a) {
  Mat out = a->value.colwise().sum();
  return link1(t, std::move(out), Op::ColSum, a);
}

Node* broadcast_rows(Tape& t, Node* row, long n) {
  if (row->rows() != 1) shape_error("broadcast_rows", row->value, row->value);
  Mat out(n, row->cols());
  out.rowwise() = row->value.row(0);
  return link1(t, std::move(out), Op::BroadcastRows, row);
}

Node* broadcast_scalar(Tape& t, Node* s, long r, long c) {
  if (s->rows() != 1 || s->cols() != 1) shape_error("broadcast_scalar", s->value, s->value);
  Mat out = Mat::Constant(r, c, s->value(0, 0));
  return link1(t, std::move(out), Op::BroadcastScalar, s);
}

Node* unary(Tape& t, Node* a, UnaryFn fn) {
  if (is_gelu_family(fn)) {
    for (long i = 0; i < a->rows(); ++i)
      for (long j = 0; j < a->cols(); ++j)
        if (!std::isfinite(a->value(i, j)))
          throw std::domain_error(std::string(unary_name(fn)) + ": non-finite input at (" +
                                  std::to_string(i) + ", " + std::to_string(j) + ")");
  }
  Mat out = a->value.unaryExpr([fn](double x) { return apply_unary(fn, x); });
  Node* n = link1(t, std::move(out), Op::Unary, a);
  n->fn = fn;
  return n;
}

Node* reshape(Tape& t, Node* a, long r, long c) {
  if (r * c != a->value.size())
    throw std::invalid_argument("reshape: cannot view " + std::to_string(a->rows()) + "x" +
                                std::to_string(a->cols()) + " as " + std::to_string(r) + "x" +
                                std::to_string(c));
  Mat out = Eigen::Map<const Mat>(a->value.data(), r, c);
  return link1(t, std::move(out), Op::Reshape, a);
}

Node* permute_cols(Tape& t, Node* a, const std::vector<int>& perm) {
  if (static_cast<long>(perm.size()) != a->cols())
    throw std::invalid_argument("permute_cols: permutation size " + std::to_string(perm.size()) +
                                " does not match " + std::to_string(a->cols()) + " columns");
  Mat out(a->rows(), a->cols());
  for (long j = 0; j < a->cols(); ++j) out.col(j) = a->value.col(perm[static_cast<std::size_t>(j)]);
  Node* n = link1(t, std::move(out), Op::PermuteCols, a);
  n->perm = perm;
  return n;
}

Node* concat_cols(Tape& t, Node* a, Node* b) {
  if (a->rows() != b->rows()) shape_error("concat_cols", a->value, b->value);
  Mat out(a->rows(), a->cols() + b->cols());
  out.leftCols(a->cols()) = a->value;
  out.rightCols(b->cols()) = b->value;
  return link2(t, std::move(out), Op::ConcatCols, a, b);
}

Node* slice_cols(Tape& t, Node* a, long start, long len) {
  if (start < 0 || len < 0 || start + len > a->cols())
    throw std::invalid_argument("slice_cols: [" + std::to_string(start) + ", " +
                                std::to_string(start + len) + ") out of range for " +
                                std::to_string(a->cols()) + " columns");
  Mat out = a->value.middleCols(start, len);
  Node* n = link1(t, std::move(out), Op::SliceCols, a);
  n->aux0 = start;
  n->aux1 = len;
  return n;
}

Node* bmm_rowwise(Tape& t, Node* A, Node* x) {
  const long N = A->rows(), s = x->cols();
  if (x->rows() != N || s == 0 || A->cols() % s != 0) shape_error("bmm_rowwise", A->value, x->value);
  const long r = A->cols() / s;
  Mat out(N, r);
  for (long i = 0; i < N; ++i) {
    Eigen::Map<const Mat> Ai(A->value.data() + i * A->cols(), r, s);
    out.row(i) = (Ai * x->value.row(i).transpose()).transpose();
  }
  return link2(t, std::move(out), Op::BmmRowwise, A, x);
}

Node* bmm_rowwise_t(Tape& t, Node* A, Node* y) {
  const long N = A->rows(), r = y->cols();
  if (y->rows() != N || r == 0 || A->cols() % r != 0) shape_error("bmm_rowwise_t", A->value, y->value);
  const long s = A->cols() / r;
  Mat out(N, s);
  for (long i = 0; i < N; ++i) {
    Eigen::Map<const Mat> Ai(A->value.data() + i * A->cols(), r, s);
    out.row(i) = (Ai.transpose() * y->value.row(i).transpose()).transpose();
  }
  return link2(t, std::move(out), Op::BmmRowwiseT, A, y);
}

Node* rowwise_outer(Tape& t, Node* y, Node* x) {
  const long N = y->rows(), r = y->cols(), s = x->cols();
  if (x->rows() != N) shape_error("rowwise_outer", y->value, x->value);
  Mat out(N, r * s);
  for (long i = 0; i < N; ++i) {
    Eigen::Map<Mat> Oi(out.data() + i * r * s, r, s);
    Oi = y->value.row(i).transpose() * x->value.row(i);
  }
  return link2(t, std::move(out), Op::RowwiseOuter, y, x);
}

Node* detach(Tape& t, Node* a) { return constant(t, a->value); }

UnaryFn unary_derivative(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Gelu: return UnaryFn::GeluD1;
    case UnaryFn::GeluD1: return UnaryFn::GeluD2;
    case UnaryFn::GeluD2: return UnaryFn::GeluD3;
    case UnaryFn::GeluD3: return UnaryFn::GeluD4;
    case UnaryFn::GeluD4:
      throw std::domain_error("unary_derivative: gelu differentiated past fourth order");
    case UnaryFn::Abs: return UnaryFn::Sign;
    case UnaryFn::Relu: return UnaryFn::Step;
    case UnaryFn::Sin: return UnaryFn::Cos;
    case UnaryFn::Cos: return UnaryFn::NegSin;
    case UnaryFn::NegSin: return UnaryFn::NegCos;
    case UnaryFn::NegCos: return UnaryFn::Sin;
    case UnaryFn::Sign:
    case UnaryFn::Step:
    case UnaryFn::Zero: return UnaryFn::Zero;
  }
  return UnaryFn::Zero;
}

NodeMap backward(Tape& t, Node* loss, const NodeMap& params, bool create_graph) {
  if (loss->rows() != 1 || loss->cols() != 1)
    throw std::invalid_argument("backward: loss must be 1x1, got " + std::to_string(loss->rows()) +
                                "x" + std::to_string(loss->cols()));

  std::vector<Node*> adj(static_cast<std::size_t>(loss->index) + 1, nullptr);
  adj[static_cast<std::size_t>(loss->index)] = constant(t, Mat::Ones(1, 1));

  // Contributions are built lazily so constant parents (data) cost nothing.
  auto acc = [&](Node* p, auto make_contrib) {
    if (!p->needs_grad || p->index > loss->index) return;
    Node* contrib = make_contrib();
    Node*& slot = adj[static_cast<std::size_t>(p->index)];
    slot = slot ? add(t, slot, contrib) : contrib;
  };

  for (int i = loss->index; i >= 0; --i) {
    Node* n = t.at(i);
    Node* g = adj[static_cast<std::size_t>(i)];
    if (!g || !n->needs_grad) continue;
    Node* a = n->parent[0];
    Node* b = n->parent[1];
    switch (n->op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add:
        acc(a, [&] { return g; });
        acc(b, [&] { return g; });
        break;
      case Op::AddRowVec:
        acc(a, [&] { return g; });
        acc(b, [&] { return colsum(t, g); });
        break;
      case Op::AddScalar:
        acc(a, [&] { return g; });
        break;
      case Op::Sub:
        acc(a, [&] { return g; });
        acc(b, [&] { return neg(t, g); });
        break;
      case Op::Neg:
        acc(a, [&] { return neg(t, g); });
        break;
      case Op::Mul:
        acc(a, [&] { return mul(t, g, b); });
        acc(b, [&] { return mul(t, g, a); });
        break;
      case Op::ScalarMul:
        acc(a, [&] { return scalar_mul(t, g, n->scalar); });
        break;
      case Op::MatMul:
        acc(a, [&] { return matmul(t, g, transpose(t, b)); });
        acc(b, [&] { return matmul(t, transpose(t, a), g); });
        break;
      case Op::Transpose:
        acc(a, [&] { return transpose(t, g); });
        break;
      case Op::Sum:
        acc(a, [&] { return broadcast_scalar(t, g, a->rows(), a->cols()); });
        break;
      case Op::ColSum:
        acc(a, [&] { return broadcast_rows(t, g, a->rows()); });
        break;
      case Op::BroadcastRows:
        acc(a, [&] { return colsum(t, g); });
        break;
      case Op::BroadcastScalar:
        acc(a, [&] { return sum(t, g); });
        break;
      case Op::Unary:
        acc(a, [&] { return mul(t, g, unary(t, a, unary_derivative(n->fn))); });
        break;
      case Op::Reshape:
        acc(a, [&] { return reshape(t, g, a->rows(), a->cols()); });
        break;
      case Op::PermuteCols:
        acc(a, [&] { return permute_cols(t, g, inverse_perm(n->perm)); });
        break;
      case Op::ConcatCols:
        acc(a, [&] { return slice_cols(t, g, 0, a->cols()); });
        acc(b, [&] { return slice_cols(t, g, a->cols(), b->cols()); });
        break;
      case Op::SliceCols:
        acc(a, [&] {
          Node* padded = g;
          if (n->aux0 > 0)
            padded = concat_cols(t, constant(t, Mat::Zero(a->rows(), n->aux0)), padded);
          const long right = a->cols() - n->aux0 - n->aux1;
          if (right > 0) padded = concat_cols(t, padded, constant(t, Mat::Zero(a->rows(), right)));
          return padded;
        });
        break;
      case Op::BmmRowwise:
        acc(a, [&] { return rowwise_outer(t, g, b); });
        acc(b, [&] { return bmm_rowwise_t(t, a, g); });
        break;
      case Op::BmmRowwiseT:
        acc(a, [&] { return rowwise_outer(t, b, g); });
        acc(b, [&] { return bmm_rowwise(t, a, g); });
        break;
      case Op::RowwiseOuter:
        acc(a, [&] { return bmm_rowwise(t, g, b); });
        acc(b, [&] { return bmm_rowwise_t(t, g, a); });
        break;
    }
  }

  NodeMap grads;
  for (const auto& [name, p] : params) {
    Node* g = p->index <= loss->index ? adj[static_cast<std::size_t>(p->index)] : nullptr;
    if (!g) g = constant(t, Mat::Zero(p->rows(), p->cols()));
    grads[name] = create_graph ? g : detach(t, g);
  }
  return grads;
}

}  // namespace ad
}  // namespace learnsysid
