#pragma once

#include "rlp/numerics/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::numerics {

enum class Primitive : std::uint8_t {
  Input,
  Parameter,
  Constant,
  MatMul,
  MatMulTransposed,
  Add,
  AddRowBias,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Exp,
  Gelu,
  Minimum,
  Clamp,
  LayerNorm,
  LogSoftmax,
  CausalSoftmax,
  Embedding,
  SliceCols,
  ConcatCols,
  GatherRows,
  Pick,
  Sum,
};

std::string_view primitive_name(Primitive op);

class GraphStateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Handle to a node of a computation record.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
  friend bool operator==(Var, Var) = default;
};

/// Reverse-mode computation record over dense row-major matrices.
///
/// Nodes are appended in topological order. In eager mode (the default)
/// every node is evaluated as it is appended; in deferred mode only shapes
/// are checked until evaluate() runs. Replaying the record with identical
/// inputs reproduces identical values bit-for-bit.
template <typename Scalar>
class BasicGraph {
 public:
  using Mat = MatrixX<Scalar>;

  explicit BasicGraph(bool eager = true) : eager_(eager) {}

  // Leaves.
  Var input(Mat value);
  Var parameter(const Mat& storage);
  Var constant(Mat value);

  // Primitives.
  Var matmul(Var a, Var b);
  Var matmul_transposed(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row_bias(Var a, Var bias);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, Scalar factor);
  Var add_scalar(Var a, Scalar offset);
  Var exp(Var a);
  Var gelu(Var a);
  Var minimum(Var a, Var b);
  Var clamp(Var a, Scalar lo, Scalar hi);
  Var layer_norm(Var x, Var gain, Var bias, Scalar eps = Scalar(1e-5));
  Var log_softmax(Var a);
  Var causal_softmax(Var a);
  Var embedding(Var table, std::span<const Index> ids);
  Var slice_cols(Var a, Index start, Index width);
  Var concat_cols(std::span<const Var> parts);
  Var gather_rows(Var a, std::span<const Index> rows);
  Var pick(Var a, std::span<const Index> rows, std::span<const Index> cols);
  Var sum(Var a);

  /// Replaces the value of an Input leaf; the record must be re-evaluated.
  void set_input(Var leaf, const Mat& value);
  Mat& input_value(Var leaf);

  /// Replays every node in order. Rejects non-finite leaves before compute.
  void evaluate();
  bool evaluated() const { return evaluated_; }

  /// Fills gradients of every node reachable from a scalar root.
  void backpropagate(Var root);

  const Mat& value(Var v) const;
  const Mat& gradient(Var v) const;
  Scalar scalar(Var v) const;
  Index rows(Var v) const { return node(v).rows; }
  Index cols(Var v) const { return node(v).cols; }
  Primitive primitive(Var v) const { return node(v).op; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  std::vector<Primitive> primitives() const;

 private:
  struct Node {
    Primitive op = Primitive::Constant;
    std::vector<std::int32_t> args;
    Index rows = 0;
    Index cols = 0;
    bool requires_grad = false;
    Scalar s0 = 0;
    Scalar s1 = 0;
    std::vector<Index> ids;
    std::vector<Index> ids2;
    const Mat* external = nullptr;
    Mat value;
    Mat grad;
    Mat cache;
    Mat cache2;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  const Mat& arg_value(const Node& n, std::size_t k) const { return val(nodes_[n.args[k]]); }
  const Mat& val(const Node& n) const {
    return n.op == Primitive::Parameter ? *n.external : n.value;
  }

  Var push(Node n);
  void forward(Node& n);
  void backward(std::size_t index);
  [[noreturn]] void shape_fail(Primitive op, const std::string& detail) const;

  std::vector<Node> nodes_;
  bool eager_ = true;
  bool evaluated_ = true;
  bool backpropagated_ = false;
};

using Graph = BasicGraph<double>;

// ---------------------------------------------------------------------------
// Implementation.

template <typename Scalar>
auto BasicGraph<Scalar>::node(Var v) const -> const Node& {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("invalid graph variable");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename Scalar>
auto BasicGraph<Scalar>::node(Var v) -> Node& {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::out_of_range("invalid graph variable");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

template <typename Scalar>
void BasicGraph<Scalar>::shape_fail(Primitive op, const std::string& detail) const {
  throw ShapeError(std::string(primitive_name(op)) + ": " + detail);
}

template <typename Scalar>
Var BasicGraph<Scalar>::push(Node n) {
  for (std::int32_t a : n.args) {
    if (nodes_[static_cast<std::size_t>(a)].requires_grad) n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  backpropagated_ = false;
  if (eager_) {
    forward(nodes_.back());
  } else {
    evaluated_ = false;
  }
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename Scalar>
Var BasicGraph<Scalar>::input(Mat value) {
  if (!value.allFinite()) throw NonFiniteError("input: non-finite leaf value");
  Node n;
  n.op = Primitive::Input;
  n.rows = value.rows();
  n.cols = value.cols();
  n.requires_grad = true;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename Scalar>
Var BasicGraph<Scalar>::parameter(const Mat& storage) {
  if (!storage.allFinite()) throw NonFiniteError("parameter: non-finite leaf value");
  Node n;
  n.op = Primitive::Parameter;
  n.rows = storage.rows();
  n.cols = storage.cols();
  n.requires_grad = true;
  n.external = &storage;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename Scalar>
Var BasicGraph<Scalar>::constant(Mat value) {
  if (!value.allFinite()) throw NonFiniteError("constant: non-finite leaf value");
  Node n;
  n.op = Primitive::Constant;
  n.rows = value.rows();
  n.cols = value.cols();
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename Scalar>
Var BasicGraph<Scalar>::matmul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.cols != nb.rows) {
    shape_fail(Primitive::MatMul, std::to_string(na.rows) + "x" + std::to_string(na.cols) + " * " +
                                      std::to_string(nb.rows) + "x" + std::to_string(nb.cols));
  }
  Node n;
  n.op = Primitive::MatMul;
  n.args = {a.id, b.id};
  n.rows = na.rows;
  n.cols = nb.cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::matmul_transposed(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.cols != nb.cols) {
    shape_fail(Primitive::MatMulTransposed, std::to_string(na.rows) + "x" + std::to_string(na.cols) +
                                                " * (" + std::to_string(nb.rows) + "x" +
                                                std::to_string(nb.cols) + ")^T");
  }
  Node n;
  n.op = Primitive::MatMulTransposed;
  n.args = {a.id, b.id};
  n.rows = na.rows;
  n.cols = nb.rows;
  return push(std::move(n));
}

namespace detail {
inline std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }
}  // namespace detail

#define RLP_SAME_SHAPE(OP, A, B)                                                               \
  do {                                                                                        \
    const Node& na_ = node(A);                                                                \
    const Node& nb_ = node(B);                                                                \
    if (na_.rows != nb_.rows || na_.cols != nb_.cols) {                                       \
      shape_fail(OP, detail::dims(na_.rows, na_.cols) + " vs " + detail::dims(nb_.rows, nb_.cols)); \
    }                                                                                         \
  } while (0)

template <typename Scalar>
Var BasicGraph<Scalar>::add(Var a, Var b) {
  RLP_SAME_SHAPE(Primitive::Add, a, b);
  Node n;
  n.op = Primitive::Add;
  n.args = {a.id, b.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::sub(Var a, Var b) {
  RLP_SAME_SHAPE(Primitive::Sub, a, b);
  Node n;
  n.op = Primitive::Sub;
  n.args = {a.id, b.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::mul(Var a, Var b) {
  RLP_SAME_SHAPE(Primitive::Mul, a, b);
  Node n;
  n.op = Primitive::Mul;
  n.args = {a.id, b.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::minimum(Var a, Var b) {
  RLP_SAME_SHAPE(Primitive::Minimum, a, b);
  Node n;
  n.op = Primitive::Minimum;
  n.args = {a.id, b.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

#undef RLP_SAME_SHAPE

template <typename Scalar>
Var BasicGraph<Scalar>::add_row_bias(Var a, Var bias) {
  const Node& na = node(a);
  const Node& nb = node(bias);
  if (nb.rows != 1 || nb.cols != na.cols) {
    shape_fail(Primitive::AddRowBias, detail::dims(na.rows, na.cols) + " + bias " + detail::dims(nb.rows, nb.cols));
  }
  Node n;
  n.op = Primitive::AddRowBias;
  n.args = {a.id, bias.id};
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::scale(Var a, Scalar factor) {
  Node n;
  n.op = Primitive::Scale;
  n.args = {a.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  n.s0 = factor;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::add_scalar(Var a, Scalar offset) {
  Node n;
  n.op = Primitive::AddScalar;
  n.args = {a.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  n.s0 = offset;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::exp(Var a) {
  Node n;
  n.op = Primitive::Exp;
  n.args = {a.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::gelu(Var a) {
  Node n;
  n.op = Primitive::Gelu;
  n.args = {a.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::clamp(Var a, Scalar lo, Scalar hi) {
  if (!(lo <= hi)) shape_fail(Primitive::Clamp, "lower bound exceeds upper bound");
  Node n;
  n.op = Primitive::Clamp;
  n.args = {a.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  n.s0 = lo;
  n.s1 = hi;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::layer_norm(Var x, Var gain, Var bias, Scalar eps) {
  const Node& nx = node(x);
  const Node& ng = node(gain);
  const Node& nb = node(bias);
  if (ng.rows != 1 || nb.rows != 1 || ng.cols != nx.cols || nb.cols != nx.cols) {
    shape_fail(Primitive::LayerNorm, "input " + detail::dims(nx.rows, nx.cols) + " gain " +
                                         detail::dims(ng.rows, ng.cols) + " bias " + detail::dims(nb.rows, nb.cols));
  }
  Node n;
  n.op = Primitive::LayerNorm;
  n.args = {x.id, gain.id, bias.id};
  n.rows = nx.rows;
  n.cols = nx.cols;
  n.s0 = eps;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::log_softmax(Var a) {
  Node n;
  n.op = Primitive::LogSoftmax;
  n.args = {a.id};
  n.rows = node(a).rows;
  n.cols = node(a).cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::causal_softmax(Var a) {
  const Node& na = node(a);
  if (na.cols < na.rows) {
    shape_fail(Primitive::CausalSoftmax, "needs at least as many keys as queries, got " + detail::dims(na.rows, na.cols));
  }
  Node n;
  n.op = Primitive::CausalSoftmax;
  n.args = {a.id};
  n.rows = na.rows;
  n.cols = na.cols;
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::embedding(Var table, std::span<const Index> ids) {
  const Node& nt = node(table);
  if (ids.empty()) shape_fail(Primitive::Embedding, "empty id list");
  for (Index id : ids) {
    if (id < 0 || id >= nt.rows) {
      shape_fail(Primitive::Embedding, "id " + std::to_string(id) + " outside table of " + std::to_string(nt.rows) + " rows");
    }
  }
  Node n;
  n.op = Primitive::Embedding;
  n.args = {table.id};
  n.rows = static_cast<Index>(ids.size());
  n.cols = nt.cols;
  n.ids.assign(ids.begin(), ids.end());
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::slice_cols(Var a, Index start, Index width) {
  const Node& na = node(a);
  if (start < 0 || width <= 0 || start + width > na.cols) {
    shape_fail(Primitive::SliceCols, "columns [" + std::to_string(start) + ", " + std::to_string(start + width) +
                                         ") of " + detail::dims(na.rows, na.cols));
  }
  Node n;
  n.op = Primitive::SliceCols;
  n.args = {a.id};
  n.rows = na.rows;
  n.cols = width;
  n.ids = {start};
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) shape_fail(Primitive::ConcatCols, "no operands");
  Node n;
  n.op = Primitive::ConcatCols;
  n.rows = node(parts[0]).rows;
  for (Var p : parts) {
    const Node& np = node(p);
    if (np.rows != n.rows) shape_fail(Primitive::ConcatCols, "row counts differ");
    n.args.push_back(p.id);
    n.cols += np.cols;
  }
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::gather_rows(Var a, std::span<const Index> rows) {
  const Node& na = node(a);
  if (rows.empty()) shape_fail(Primitive::GatherRows, "empty row list");
  for (Index r : rows) {
    if (r < 0 || r >= na.rows) shape_fail(Primitive::GatherRows, "row " + std::to_string(r) + " out of range");
  }
  Node n;
  n.op = Primitive::GatherRows;
  n.args = {a.id};
  n.rows = static_cast<Index>(rows.size());
  n.cols = na.cols;
  n.ids.assign(rows.begin(), rows.end());
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::pick(Var a, std::span<const Index> rows, std::span<const Index> cols) {
  const Node& na = node(a);
  if (rows.size() != cols.size() || rows.empty()) shape_fail(Primitive::Pick, "index lists must be non-empty and equal length");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= na.rows || cols[k] < 0 || cols[k] >= na.cols) {
      shape_fail(Primitive::Pick, "entry (" + std::to_string(rows[k]) + ", " + std::to_string(cols[k]) + ") outside " +
                                      detail::dims(na.rows, na.cols));
    }
  }
  Node n;
  n.op = Primitive::Pick;
  n.args = {a.id};
  n.rows = static_cast<Index>(rows.size());
  n.cols = 1;
  n.ids.assign(rows.begin(), rows.end());
  n.ids2.assign(cols.begin(), cols.end());
  return push(std::move(n));
}

template <typename Scalar>
Var BasicGraph<Scalar>::sum(Var a) {
  Node n;
  n.op = Primitive::Sum;
  n.args = {a.id};
  n.rows = 1;
  n.cols = 1;
  return push(std::move(n));
}

template <typename Scalar>
void BasicGraph<Scalar>::set_input(Var leaf, const Mat& value) {
  Node& n = node(leaf);
  if (n.op != Primitive::Input) throw GraphStateError("set_input: variable is not an input leaf");
  if (value.rows() != n.rows || value.cols() != n.cols) {
    throw ShapeError("input: expected " + detail::dims(n.rows, n.cols) + ", got " + detail::dims(value.rows(), value.cols()));
  }
  n.value = value;
  evaluated_ = false;
}

template <typename Scalar>
auto BasicGraph<Scalar>::input_value(Var leaf) -> Mat& {
  Node& n = node(leaf);
  if (n.op != Primitive::Input) throw GraphStateError("input_value: variable is not an input leaf");
  evaluated_ = false;
  return n.value;
}

template <typename Scalar>
void BasicGraph<Scalar>::evaluate() {
  for (const Node& n : nodes_) {
    if (n.op == Primitive::Input || n.op == Primitive::Parameter || n.op == Primitive::Constant) {
      if (!val(n).allFinite()) throw NonFiniteError(std::string(primitive_name(n.op)) + ": non-finite leaf value");
    }
  }
  for (Node& n : nodes_) forward(n);
  evaluated_ = true;
  backpropagated_ = false;
}

template <typename Scalar>
std::vector<Primitive> BasicGraph<Scalar>::primitives() const {
  std::vector<Primitive> out;
  out.reserve(nodes_.size());
  for (const Node& n : nodes_) out.push_back(n.op);
  return out;
}

template <typename Scalar>
auto BasicGraph<Scalar>::value(Var v) const -> const Mat& {
  if (!evaluated_) throw GraphStateError("value: record has not been evaluated");
  return val(node(v));
}

template <typename Scalar>
auto BasicGraph<Scalar>::gradient(Var v) const -> const Mat& {
  if (!backpropagated_) throw GraphStateError("gradient: backpropagate has not run");
  return node(v).grad;
}

template <typename Scalar>
Scalar BasicGraph<Scalar>::scalar(Var v) const {
  const Mat& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("scalar: value is " + detail::dims(m.rows(), m.cols()));
  return m(0, 0);
}

namespace detail {

template <typename Scalar>
constexpr Scalar gelu_c = Scalar(0.7978845608028654);  // sqrt(2/pi)

template <typename Scalar>
inline Scalar gelu(Scalar x) {
  const Scalar u = gelu_c<Scalar> * (x + Scalar(0.044715) * x * x * x);
  return Scalar(0.5) * x * (Scalar(1) + std::tanh(u));
}

template <typename Scalar>
inline Scalar gelu_grad(Scalar x) {
  const Scalar u = gelu_c<Scalar> * (x + Scalar(0.044715) * x * x * x);
  const Scalar t = std::tanh(u);
  const Scalar du = gelu_c<Scalar> * (Scalar(1) + Scalar(3) * Scalar(0.044715) * x * x);
  return Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * x * (Scalar(1) - t * t) * du;
}

}  // namespace detail

template <typename Scalar>
void BasicGraph<Scalar>::forward(Node& n) {
  switch (n.op) {
    case Primitive::Input:
    case Primitive::Parameter:
    case Primitive::Constant:
      return;
    case Primitive::MatMul:
      n.value.noalias() = arg_value(n, 0) * arg_value(n, 1);
      return;
    case Primitive::MatMulTransposed:
      n.value.noalias() = arg_value(n, 0) * arg_value(n, 1).transpose();
      return;
    case Primitive::Add:
      n.value = arg_value(n, 0) + arg_value(n, 1);
      return;
    case Primitive::AddRowBias:
      n.value = arg_value(n, 0).rowwise() + arg_value(n, 1).row(0);
      return;
    case Primitive::Sub:
      n.value = arg_value(n, 0) - arg_value(n, 1);
      return;
    case Primitive::Mul:
      n.value = arg_value(n, 0).cwiseProduct(arg_value(n, 1));
      return;
    case Primitive::Scale:
      n.value = arg_value(n, 0) * n.s0;
      return;
    case Primitive::AddScalar:
      n.value = arg_value(n, 0).array() + n.s0;
      return;
    case Primitive::Exp:
      n.value = arg_value(n, 0).array().exp();
      return;
    case Primitive::Gelu:
      n.value = arg_value(n, 0).unaryExpr([](Scalar x) { return detail::gelu(x); });
      return;
    case Primitive::Minimum:
      n.value = arg_value(n, 0).cwiseMin(arg_value(n, 1));
      return;
    case Primitive::Clamp:
      n.value = arg_value(n, 0).cwiseMax(n.s0).cwiseMin(n.s1);
      return;
    case Primitive::LayerNorm: {
      const Mat& x = arg_value(n, 0);
      const Mat& g = arg_value(n, 1);
      const Mat& b = arg_value(n, 2);
      const Index d = x.cols();
      n.cache.resize(x.rows(), d);   // normalized input
      n.cache2.resize(x.rows(), 1);  // reciprocal std
      n.value.resize(x.rows(), d);
      for (Index r = 0; r < x.rows(); ++r) {
        const Scalar mean = x.row(r).sum() / Scalar(d);
        const Scalar var = (x.row(r).array() - mean).square().sum() / Scalar(d);
        const Scalar rstd = Scalar(1) / std::sqrt(var + n.s0);
        n.cache2(r, 0) = rstd;
        n.cache.row(r) = (x.row(r).array() - mean) * rstd;
        n.value.row(r) = n.cache.row(r).cwiseProduct(g.row(0)) + b.row(0);
      }
      return;
    }
    case Primitive::LogSoftmax: {
      const Mat& x = arg_value(n, 0);
      n.value.resize(x.rows(), x.cols());
      for (Index r = 0; r < x.rows(); ++r) {
        const Scalar m = x.row(r).maxCoeff();
        const Scalar lse = m + std::log((x.row(r).array() - m).exp().sum());
        n.value.row(r) = x.row(r).array() - lse;
      }
      return;
    }
    case Primitive::CausalSoftmax: {
      const Mat& x = arg_value(n, 0);
      const Index offset = x.cols() - x.rows();
      n.value.setZero(x.rows(), x.cols());
      for (Index r = 0; r < x.rows(); ++r) {
        const Index width = r + offset + 1;
        auto row = x.row(r).head(width);
        const Scalar m = row.maxCoeff();
        auto e = (row.array() - m).exp();
        const Scalar z = e.sum();
        n.value.row(r).head(width) = e / z;
      }
      return;
    }
    case Primitive::Embedding: {
      const Mat& t = arg_value(n, 0);
      n.value.resize(n.rows, n.cols);
      for (Index r = 0; r < n.rows; ++r) n.value.row(r) = t.row(n.ids[static_cast<std::size_t>(r)]);
      return;
    }
    case Primitive::SliceCols:
      n.value = arg_value(n, 0).middleCols(n.ids[0], n.cols);
      return;
    case Primitive::ConcatCols: {
      n.value.resize(n.rows, n.cols);
      Index offset = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        const Mat& p = arg_value(n, k);
        n.value.middleCols(offset, p.cols()) = p;
        offset += p.cols();
      }
      return;
    }
    case Primitive::GatherRows: {
      const Mat& a = arg_value(n, 0);
      n.value.resize(n.rows, n.cols);
      for (Index r = 0; r < n.rows; ++r) n.value.row(r) = a.row(n.ids[static_cast<std::size_t>(r)]);
      return;
    }
    case Primitive::Pick: {
      const Mat& a = arg_value(n, 0);
      n.value.resize(n.rows, 1);
      for (Index k = 0; k < n.rows; ++k) {
        n.value(k, 0) = a(n.ids[static_cast<std::size_t>(k)], n.ids2[static_cast<std::size_t>(k)]);
      }
      return;
    }
    case Primitive::Sum:
      n.value.resize(1, 1);
      n.value(0, 0) = arg_value(n, 0).sum();
      return;
  }
}

template <typename Scalar>
void BasicGraph<Scalar>::backpropagate(Var root) {
  if (!evaluated_) throw GraphStateError("backpropagate: record has not been evaluated");
  const Node& r = node(root);
  if (r.rows != 1 || r.cols != 1) throw GraphStateError("backpropagate: root is not a scalar");
  for (std::size_t i = 0; i <= static_cast<std::size_t>(root.id); ++i) {
    Node& n = nodes_[i];
    if (n.requires_grad) {
      n.grad.setZero(n.rows, n.cols);
    } else {
      n.grad.resize(0, 0);
    }
  }
  for (std::size_t i = static_cast<std::size_t>(root.id) + 1; i < nodes_.size(); ++i) nodes_[i].grad.resize(0, 0);
  if (r.requires_grad) {
    nodes_[static_cast<std::size_t>(root.id)].grad(0, 0) = Scalar(1);
    for (std::size_t i = static_cast<std::size_t>(root.id) + 1; i-- > 0;) {
      if (nodes_[i].requires_grad) backward(i);
    }
  }
  backpropagated_ = true;
}

template <typename Scalar>
void BasicGraph<Scalar>::backward(std::size_t index) {
  Node& n = nodes_[index];
  const Mat& g = n.grad;
  auto needs = [&](std::size_t k) { return nodes_[static_cast<std::size_t>(n.args[k])].requires_grad; };
  auto grad_of = [&](std::size_t k) -> Mat& { return nodes_[static_cast<std::size_t>(n.args[k])].grad; };
  switch (n.op) {
    case Primitive::Input:
    case Primitive::Parameter:
    case Primitive::Constant:
      return;
    case Primitive::MatMul:
      if (needs(0)) grad_of(0).noalias() += g * arg_value(n, 1).transpose();
      if (needs(1)) grad_of(1).noalias() += arg_value(n, 0).transpose() * g;
      return;
    case Primitive::MatMulTransposed:
      if (needs(0)) grad_of(0).noalias() += g * arg_value(n, 1);
      if (needs(1)) grad_of(1).noalias() += g.transpose() * arg_value(n, 0);
      return;
    case Primitive::Add:
      if (needs(0)) grad_of(0) += g;
      if (needs(1)) grad_of(1) += g;
      return;
    case Primitive::AddRowBias:
      if (needs(0)) grad_of(0) += g;
      if (needs(1)) grad_of(1) += g.colwise().sum();
      return;
    case Primitive::Sub:
      if (needs(0)) grad_of(0) += g;
      if (needs(1)) grad_of(1) -= g;
      return;
    case Primitive::Mul:
      if (needs(0)) grad_of(0) += g.cwiseProduct(arg_value(n, 1));
      if (needs(1)) grad_of(1) += g.cwiseProduct(arg_value(n, 0));
      return;
    case Primitive::Scale:
      if (needs(0)) grad_of(0) += g * n.s0;
      return;
    case Primitive::AddScalar:
      if (needs(0)) grad_of(0) += g;
      return;
    case Primitive::Exp:
      if (needs(0)) grad_of(0) += g.cwiseProduct(n.value);
      return;
    case Primitive::Gelu:
      if (needs(0)) grad_of(0) += g.cwiseProduct(arg_value(n, 0).unaryExpr([](Scalar x) { return detail::gelu_grad(x); }));
      return;
    case Primitive::Minimum: {
      const Mat& a = arg_value(n, 0);
      const Mat& b = arg_value(n, 1);
      if (needs(0)) grad_of(0) += (a.array() <= b.array()).select(g, Scalar(0)).matrix();
      if (needs(1)) grad_of(1) += (a.array() <= b.array()).select(Scalar(0), g).matrix();
      return;
    }
    case Primitive::Clamp: {
      const Mat& a = arg_value(n, 0);
      if (needs(0)) grad_of(0) += ((a.array() >= n.s0) && (a.array() <= n.s1)).select(g, Scalar(0)).matrix();
      return;
    }
    case Primitive::LayerNorm: {
      const Mat& gain = arg_value(n, 1);
      const Index d = n.cols;
      if (needs(0)) {
        Mat& gx = grad_of(0);
        for (Index r = 0; r < n.rows; ++r) {
          RowVectorX<Scalar> dxhat = g.row(r).cwiseProduct(gain.row(0));
          const Scalar mean_d = dxhat.sum() / Scalar(d);
          const Scalar mean_dx = dxhat.cwiseProduct(n.cache.row(r)).sum() / Scalar(d);
          gx.row(r).array() += n.cache2(r, 0) * (dxhat.array() - mean_d - n.cache.row(r).array() * mean_dx);
        }
      }
      if (needs(1)) grad_of(1) += g.cwiseProduct(n.cache).colwise().sum();
      if (needs(2)) grad_of(2) += g.colwise().sum();
      return;
    }
    case Primitive::LogSoftmax: {
      if (!needs(0)) return;
      Mat& gx = grad_of(0);
      for (Index r = 0; r < n.rows; ++r) {
        const Scalar s = g.row(r).sum();
        gx.row(r).array() += g.row(r).array() - n.value.row(r).array().exp() * s;
      }
      return;
    }
    case Primitive::CausalSoftmax: {
      if (!needs(0)) return;
      Mat& gx = grad_of(0);
      for (Index r = 0; r < n.rows; ++r) {
        const Scalar dot = g.row(r).dot(n.value.row(r));
        gx.row(r).array() += n.value.row(r).array() * (g.row(r).array() - dot);
      }
      return;
    }
    case Primitive::Embedding: {
      if (!needs(0)) return;
      Mat& gt = grad_of(0);
      for (Index r = 0; r < n.rows; ++r) gt.row(n.ids[static_cast<std::size_t>(r)]) += g.row(r);
      return;
    }
    case Primitive::SliceCols:
      if (needs(0)) grad_of(0).middleCols(n.ids[0], n.cols) += g;
      return;
    case Primitive::ConcatCols: {
      Index offset = 0;
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        const Index w = nodes_[static_cast<std::size_t>(n.args[k])].cols;
        if (needs(k)) grad_of(k) += g.middleCols(offset, w);
        offset += w;
      }
      return;
    }
    case Primitive::GatherRows: {
      if (!needs(0)) return;
      Mat& ga = grad_of(0);
      for (Index r = 0; r < n.rows; ++r) ga.row(n.ids[static_cast<std::size_t>(r)]) += g.row(r);
      return;
    }
    case Primitive::Pick: {
      if (!needs(0)) return;
      Mat& ga = grad_of(0);
      for (Index k = 0; k < n.rows; ++k) {
        ga(n.ids[static_cast<std::size_t>(k)], n.ids2[static_cast<std::size_t>(k)]) += g(k, 0);
      }
      return;
    }
    case Primitive::Sum:
      if (needs(0)) grad_of(0).array() += g(0, 0);
      return;
  }
}

extern template class BasicGraph<double>;

}  // namespace rlp::numerics
