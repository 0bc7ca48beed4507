#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace learnsysid {

// Row-major so a matrix row is a contiguous span; the batched row-wise ops
// below rely on that.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace ad {

enum class Op {
  Leaf,
  Constant,
  Add,
  AddRowVec,
  AddScalar,
  Sub,
  Neg,
  Mul,
  ScalarMul,
  MatMul,
  Transpose,
  Sum,
  ColSum,
  BroadcastRows,
  BroadcastScalar,
  Unary,
  Reshape,
  PermuteCols,
  ConcatCols,
  SliceCols,
  BmmRowwise,
  BmmRowwiseT,
  RowwiseOuter,
};

enum class UnaryFn {
  Gelu,
  GeluD1,
  GeluD2,
  GeluD3,
  GeluD4,
  Abs,
  Sign,
  Relu,
  Step,
  Sin,
  Cos,
  NegSin,
  NegCos,
  Zero,
};

struct Node {
  Mat value;
  Op op = Op::Constant;
  UnaryFn fn = UnaryFn::Zero;
  double scalar = 0.0;
  long aux0 = 0;  // SliceCols start
  long aux1 = 0;  // SliceCols length
  std::vector<int> perm;
  std::array<Node*, 2> parent{nullptr, nullptr};
  int arity = 0;
  bool needs_grad = false;
  int index = -1;
  std::string name;

  long rows() const { return value.rows(); }
  long cols() const { return value.cols(); }
};

// Owns every node built during a forward/backward episode. Clearing the tape
// invalidates all Node pointers handed out since the last clear.
class Tape {
 public:
  Node* make(Mat value, Op op);
  void clear();
  std::size_t size() const { return nodes_.size(); }
  Node* at(int index) const { return nodes_[static_cast<std::size_t>(index)].get(); }

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

using NodeMap = std::map<std::string, Node*>;

Node* leaf(Tape& t, const Mat& value, const std::string& name);
Node* constant(Tape& t, const Mat& value);
Node* constant_scalar(Tape& t, double value);

Node* add(Tape& t, Node* a, Node* b);
Node* add_rowvec(Tape& t, Node* a, Node* row);  // row is 1 x C
Node* add_scalar(Tape& t, Node* a, double s);
Node* sub(Tape& t, Node* a, Node* b);
Node* neg(Tape& t, Node* a);
Node* mul(Tape& t, Node* a, Node* b);  // elementwise
Node* scalar_mul(Tape& t, Node* a, double s);
Node* matmul(Tape& t, Node* a, Node* b);
Node* transpose(Tape& t, Node* a);
Node* sum(Tape& t, Node* a);                          // -> 1 x 1
Node* colsum(Tape& t, Node* a);                       // -> 1 x C
Node* broadcast_rows(Tape& t, Node* row, long n);     // 1 x C -> n x C
Node* broadcast_scalar(Tape& t, Node* s, long r, long c);
Node* unary(Tape& t, Node* a, UnaryFn fn);
Node* reshape(Tape& t, Node* a, long r, long c);  // row-major element order
Node* permute_cols(Tape& t, Node* a, const std::vector<int>& perm);
Node* concat_cols(Tape& t, Node* a, Node* b);
Node* slice_cols(Tape& t, Node* a, long start, long len);

// Row-batched products. A stores one r x s matrix per row, flattened
// row-major. bmm_rowwise: out_n = A_n * x_n. bmm_rowwise_t: out_n = A_n^T y_n.
// rowwise_outer: out_n = flatten(y_n x_n^T). The three are closed under
// differentiation, which is what makes second-order meta-gradients work.
Node* bmm_rowwise(Tape& t, Node* A, Node* x);
Node* bmm_rowwise_t(Tape& t, Node* A, Node* y);
Node* rowwise_outer(Tape& t, Node* y, Node* x);

// Value copy with gradient flow severed.
Node* detach(Tape& t, Node* a);

UnaryFn unary_derivative(UnaryFn fn);

// Reverse sweep from a 1x1 loss. Returns one gradient node per named
// parameter; parameters the loss never touched get explicit zeros. With
// create_graph the returned nodes are themselves differentiable, otherwise
// they are detached constants with identical values.
NodeMap backward(Tape& t, Node* loss, const NodeMap& params, bool create_graph);

}  // namespace ad
}  // namespace learnsysid
